#pragma once

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "malab/regularity_lab/lemmas.hpp"
#include "malab/regularity_lab/levels.hpp"

namespace malab {

nlohmann::json to_json(const LevelDecomposition& d);
nlohmann::json to_json(const TailReport& t);
nlohmann::json to_json(const MeasureDecay& m);
nlohmann::json to_json(const W21Norm& w);
nlohmann::json to_json(const EpsilonEstimate& e);
nlohmann::json to_json(const BasicReport& b);
nlohmann::json to_json(const ScReport& s);
nlohmann::json to_json(const DecayReport& r);

/// k, |D_k|, energy, contraction
std::string decay_csv(const LevelDecomposition& d);

/// Log-log polyline plot; non-positive points are skipped.
std::string loglog_svg(const std::string& title, const std::vector<double>& x,
                       const std::vector<double>& y);

}  // namespace malab
