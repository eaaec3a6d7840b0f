// Copyright (c) 2026 adgen authors
// SPDX-License-Identifier: Apache-2.0
//
// The five reward configurations of the ablation study: which reward
// components are active and whether risk/diversity credit is assigned
// at sentence or token granularity.

#pragma once

#include <string>

namespace adgen {

enum class AblationId { model1, model2, model3, model4, relate };
enum class Granularity { sentence, token };

struct AblationConfig {
    AblationId id = AblationId::relate;
    bool structural_quality = true;
    bool ctcvr = true;
    bool diversity = true;
    bool semantic_quality = true;
    bool credit_assignment = true;
    Granularity granularity = Granularity::token;
};

/// Canonical component mix for an ablation row.
AblationConfig make_ablation(AblationId id);

/// Rejects component mixes that do not match any canonical row.
void validate_ablation(const AblationConfig& config);

std::string ablation_name(AblationId id);
AblationId parse_ablation_id(const std::string& name);

} // namespace adgen
