// Copyright (c) 2026 adgen authors
// SPDX-License-Identifier: Apache-2.0

#include "adgen/ablation.hpp"

#include <stdexcept>

namespace adgen {

AblationConfig make_ablation(AblationId id) {
    AblationConfig config;
    config.id = id;
    config.structural_quality = true;
    config.ctcvr = id != AblationId::model1;
    config.diversity = id == AblationId::model3 || id == AblationId::model4 ||
                       id == AblationId::relate;
    config.semantic_quality = id == AblationId::model4 || id == AblationId::relate;
    config.credit_assignment = id == AblationId::relate;
    config.granularity =
        id == AblationId::relate ? Granularity::token : Granularity::sentence;
    return config;
}

void validate_ablation(const AblationConfig& config) {
    const AblationConfig canonical = make_ablation(config.id);
    const bool matches = config.structural_quality == canonical.structural_quality &&
                         config.ctcvr == canonical.ctcvr &&
                         config.diversity == canonical.diversity &&
                         config.semantic_quality == canonical.semantic_quality &&
                         config.credit_assignment == canonical.credit_assignment &&
                         config.granularity == canonical.granularity;
    if (!matches) {
        throw std::invalid_argument("ablation " + ablation_name(config.id) +
                                    " does not match its canonical component mix");
    }
}

std::string ablation_name(AblationId id) {
    switch (id) {
    case AblationId::model1: return "Model1";
    case AblationId::model2: return "Model2";
    case AblationId::model3: return "Model3";
    case AblationId::model4: return "Model4";
    case AblationId::relate: return "RELATE";
    }
    throw std::invalid_argument("unknown ablation id");
}

AblationId parse_ablation_id(const std::string& name) {
    if (name == "Model1") return AblationId::model1;
    if (name == "Model2") return AblationId::model2;
    if (name == "Model3") return AblationId::model3;
    if (name == "Model4") return AblationId::model4;
    if (name == "RELATE") return AblationId::relate;
    throw std::invalid_argument("unknown ablation id: " + name);
}

} // namespace adgen
