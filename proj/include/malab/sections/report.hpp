#pragma once

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "malab/sections/engulfing.hpp"
#include "malab/sections/normalization.hpp"
#include "malab/sections/vitali.hpp"

namespace malab {

nlohmann::json to_json(const Section& s);
nlohmann::json to_json(const Normalization& n);
nlohmann::json to_json(const EngulfingResult& r);
nlohmann::json to_json(const VitaliCover& c);

/// Domain outline plus one polygon per section; `highlight` sections are drawn filled.
std::string sections_svg(const DomainSpec& domain, const std::vector<const Section*>& outlines,
                         const std::vector<const Section*>& highlight = {});

}  // namespace malab
