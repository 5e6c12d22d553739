#include "malab/cli_reports/runner.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>

#include "malab/degenerate_mu/doubling.hpp"
#include "malab/degenerate_mu/pipeline.hpp"
#include "malab/ma_solver/wang.hpp"
#include "malab/regularity_lab/lemmas.hpp"
#include "malab/regularity_lab/levels.hpp"
#include "malab/regularity_lab/report.hpp"
#include "malab/sections/engulfing.hpp"
#include "malab/sections/report.hpp"
#include "malab/sections/vitali.hpp"

namespace malab {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr double kEpsilons[] = {1.0 / 16, 1.0 / 8, 1.0 / 4, 1.0 / 2, 1.0, 2.0};

json nan_safe(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

std::string format_number(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

struct FieldEntry {
  int nodes = 0;
  ConvexField u;
  HessianField H;
  Region region;
  std::vector<std::uint8_t> allowed;  // where sections may reach
  std::optional<SolveReport> report;
};

class Context {
 public:
  Context(const ExperimentConfig& c) : config(c), out(c.output) {
    fs::create_directories(out);
    manifest.config_hash = c.hash();
    manifest.selector = c.selector();
    manifest.config = c.to_json();
  }

  const ExperimentConfig& config;
  fs::path out;
  RunManifest manifest;
  std::vector<FieldEntry> fields;
  std::optional<double> delta;
  json summary = json::object();

  void write(const std::string& name, const std::string& content) {
    std::ofstream f(out / name, std::ios::binary);
    if (!f) throw Error(ErrorCode::Io, "cannot write " + (out / name).string());
    f << content;
    if (std::find(manifest.files.begin(), manifest.files.end(), name) == manifest.files.end())
      manifest.files.push_back(name);
  }
  void write_json(const std::string& name, const json& j) { write(name, j.dump(2) + "\n"); }

  DomainSpec domain() const {
    return build_domain(config.domain == "ball" ? ShapeDescriptor::ball(2) : ShapeDescriptor::square());
  }

  const WangSolution& wang() {
    if (!wang_) wang_ = wang_construct(config.wang_alpha).scaled(config.wang_level);
    return *wang_;
  }

  MeasureSpec measure() const {
    if (config.measure.is_null()) throw Error(ErrorCode::ConfigError, "this stage needs mu.spec");
    return MeasureSpec::from_json(config.measure);
  }

  void ensure_fields() {
    if (!fields.empty()) return;
    for (int n : config.grids) {
      FieldEntry e;
      e.nodes = n;
      if (config.problem == Problem::Wang) {
        const double hx = config.wang_half_widths[0], hy = config.wang_half_widths[1];
        const DomainSpec box = box_domain(make_vec(-hx, -hy), make_vec(hx, hy));
        const Grid g = Grid::box(make_vec(-hx, -hy), make_vec(hx, hy), 2.0 * hx / (n - 1));
        e.u = wang_field(wang(), g, box);
        e.region = sublevel_region(e.u, config.wang_level);
        e.allowed = sublevel_region(e.u, 2.0 * config.wang_level).mask;
      } else {
        const DomainSpec d = domain();
        const Grid g = domain_grid(d, n);
        RhsSpec rhs;
        switch (config.problem) {
          case Problem::Radial: rhs = RhsSpec::constant(1.0); break;
          case Problem::Oscillatory:
            rhs = RhsSpec::oscillatory(config.oscillation_amplitude, config.oscillation_cells);
            break;
          default: {
            const MeasureSpec mu = normalize_mass(measure(), g, d);
            rhs = measure_rhs(measure_field(mu, g, d));
          }
        }
        auto solved = solve_dirichlet(g, d, rhs, config.solver);
        e.u = std::move(solved.first);
        e.report = solved.second;
        e.region = interior_region(e.u);
        e.allowed = e.u.interior;
      }
      e.H = discrete_hessian(e.u);
      fields.push_back(std::move(e));
    }
  }

  FieldEntry& finest() {
    ensure_fields();
    return fields.back();
  }

 private:
  std::optional<WangSolution> wang_;
};

// Max difference at coarse nodes between grids with N_fine = 2 N_coarse - 1.
std::optional<double> nested_gap(const ConvexField& a, const ConvexField& b) {
  if (b.grid.size()[0] != 2 * a.grid.size()[0] - 1 || b.grid.size()[1] != 2 * a.grid.size()[1] - 1)
    return std::nullopt;
  double gap = 0.0;
  for (std::size_t i = 0; i < a.grid.count(); ++i) {
    const Index3 c = a.grid.coords(i);
    gap = std::max(gap, std::abs(a[i] - b[b.grid.index({2 * c[0], 2 * c[1], 0})]));
  }
  return gap;
}

void stage_solve(Context& ctx) {
  ctx.ensure_fields();
  json summary = json::array();
  for (std::size_t k = 0; k < ctx.fields.size(); ++k) {
    const FieldEntry& e = ctx.fields[k];
    json j = {{"nodes", e.nodes}, {"spacing", e.u.grid.spacing()}, {"region_nodes", e.region.count()}};
    if (e.report) j["solve"] = e.report->to_json();
    if (ctx.config.problem == Problem::Radial && ctx.config.domain == "ball") {
      double err = 0.0;
      for (std::size_t i = 0; i < e.u.grid.count(); ++i)
        if (e.u.interior[i]) err = std::max(err, std::abs(e.u[i] - 0.5 * (e.u.grid.point(i).squaredNorm() - 1.0)));
      j["max_error"] = err;
    }
    if (k > 0)
      if (const auto gap = nested_gap(ctx.fields[k - 1].u, e.u)) j["gap_to_coarser"] = *gap;
    ctx.write_json("solve_" + std::to_string(e.nodes) + ".json", j);
    summary.push_back(j);
  }
  ctx.summary["solve"] = summary;
}

void stage_sections(Context& ctx) {
  FieldEntry& e = ctx.finest();
  EngulfingOptions o;
  o.pairs = ctx.config.engulfing_pairs;
  o.seed = ctx.config.seed;
  o.max_exponent = ctx.config.max_delta_exponent;
  const DeltaEstimate d = estimate_delta(e.u, o);
  ctx.delta = d.delta;
  ctx.write_json("delta.json", {{"delta", d.delta}, {"pairs", d.pairs}, {"engulfing", to_json(d.result)}});
  ctx.summary["delta"] = d.delta;
}

// Largest dyadic h whose section stays inside the allowed nodes and off the boundary.
// Sections grow with h, so admissibility is monotone and bisection over the exponent applies.
std::optional<double> largest_height(const FieldEntry& e, std::size_t x) {
  double range = 0.0;
  for (std::size_t i = 0; i < e.u.grid.count(); ++i)
    if (e.u.interior[i]) range = std::max(range, std::abs(e.u[i]));
  const double h0 = dyadic_floor(4.0 * range);
  auto inside = [&](int j) {
    const Section s = compute_section(e.u, x, std::ldexp(h0, -j), {.allow_unresolved = true});
    if (s.touches_boundary) return false;
    for (std::size_t i : s.nodes)
      if (!e.allowed[i]) return false;
    return true;
  };
  int lo = 0, hi = 60;
  if (!inside(hi)) return std::nullopt;
  if (inside(lo)) hi = lo;
  while (hi - lo > 1) {
    const int mid = (lo + hi) / 2;
    (inside(mid) ? hi : lo) = mid;
  }
  if (compute_section(e.u, x, std::ldexp(h0, -hi), {.allow_unresolved = true}).nodes.size() < 5) return std::nullopt;
  return std::ldexp(h0, -hi);
}

void stage_cover(Context& ctx) {
  FieldEntry& e = ctx.finest();
  const double delta = ctx.delta.value_or(1.0 / 16);
  const LevelDecomposition d = level_decompose(e.H, e.region, ctx.config.M.front());
  std::vector<std::size_t> targets;
  if (d.levels() > 1 && !d.sets[1].empty()) {
    targets = d.sets[1];
  } else {
    // No level above the base: cover a sparse lattice of the region instead.
    const int stride = std::max(1, e.nodes / 16);
    for (std::size_t i = 0; i < e.u.grid.count(); ++i) {
      const Index3 c = e.u.grid.coords(i);
      if (e.region.mask[i] && c[0] % stride == 0 && c[1] % stride == 0) targets.push_back(i);
    }
  }
  const VitaliCover cover =
      vitali_cover_search(e.u, targets, [&](std::size_t x) { return largest_height(e, x); }, delta);
  ctx.write_json("cover.json", to_json(cover));
  std::vector<const Section*> full, shrunk;
  for (const auto& el : cover.selected) {
    full.push_back(&el.full);
    shrunk.push_back(&el.shrunk);
  }
  ctx.write("cover.svg", sections_svg(e.u.domain, full, shrunk));
  ctx.summary["cover"] = {{"delta", delta},
                          {"targets", cover.targets},
                          {"selected", cover.selected.size()},
                          {"excluded", cover.excluded.size()}};
}

void stage_decay(Context& ctx) {
  FieldEntry& e = ctx.finest();
  json summary = json::object();
  for (double M : ctx.config.M) {
    const LevelDecomposition d = level_decompose(e.H, e.region, M);
    DecayOptions o;
    o.delta = ctx.delta.value_or(1.0 / 16);
    o.C0 = ctx.config.C0;
    o.search_levels = ctx.config.search_levels;
    o.allowed = e.allowed;
    const DecayReport r = decay_iterate(e.u, e.H, d, o);
    const std::string tag = "decay_M" + format_number(M);
    ctx.write_json(tag + ".json", {{"levels", to_json(d)}, {"decay", to_json(r)}});
    ctx.write(tag + ".csv", decay_csv(d));
    summary[format_number(M)] = {{"tau", r.tau},
                                 {"C", nan_safe(r.C)},
                                 {"epsilon_fit", nan_safe(r.epsilon)},
                                 {"monotone", r.monotone},
                                 {"valid", r.valid},
                                 {"levels", d.levels()}};
  }
  ctx.summary["decay"] = summary;
}

void stage_tails(Context& ctx) {
  ctx.ensure_fields();
  json all = json::object(), summary = json::object();
  std::vector<double> constants;
  for (const FieldEntry& e : ctx.fields) {
    const LevelDecomposition d = level_decompose(e.H, e.region, 2.0);
    const TailReport t = tail_bound_check(d, ctx.config.tail_K_max);
    all[std::to_string(e.nodes)] = to_json(t);
    summary[std::to_string(e.nodes)] = {{"uniform_c", t.uniform_c}, {"slope", t.slope}, {"trivial", t.trivial}};
    constants.push_back(t.uniform_c);
    ctx.write("tails_" + std::to_string(e.nodes) + ".svg",
              loglog_svg("|F_K| against K, " + std::to_string(e.nodes) + " nodes", t.K, t.measure));
  }
  if (constants.size() >= 2 && constants[constants.size() - 2] > 0.0)
    summary["refinement_change"] = std::abs(constants.back() / constants[constants.size() - 2] - 1.0);
  ctx.write_json("tails.json", all);
  ctx.summary["tails"] = summary;
}

void stage_epsilon(Context& ctx) {
  ctx.ensure_fields();
  std::ostringstream csv;
  csv.precision(17);
  csv << "epsilon,nodes,direct,layer_cake,relative_difference\n";
  json table = json::array();
  for (double eps : kEpsilons) {
    json row = {{"epsilon", eps}};
    std::vector<double> norms;
    for (const FieldEntry& e : ctx.fields) {
      const W21Norm w = w21eps_norm(e.H, e.region, eps);
      norms.push_back(w.direct);
      csv << eps << ',' << e.nodes << ',' << w.direct << ',' << w.layer_cake << ',' << w.relative_difference << '\n';
    }
    double growth = 0.0;
    for (std::size_t k = 1; k < norms.size(); ++k) growth = std::max(growth, norms[k] / norms[k - 1] - 1.0);
    row["norms"] = norms;
    row["growth"] = growth;
    row["stable"] = growth <= kStableGrowth;
    table.push_back(row);
  }
  json j = {{"table", table}};
  if (ctx.fields.size() >= 3) {
    std::vector<RefinementInput> family;
    for (const FieldEntry& e : ctx.fields) family.push_back({&e.H, &e.region});
    const EpsilonEstimate est = epsilon_estimate(family);
    j["estimate"] = to_json(est);
    ctx.summary["epsilon"] = est.epsilon;
  } else {
    j["estimate"] = nullptr;
    ctx.summary["epsilon"] = nullptr;
  }
  ctx.write_json("epsilon.json", j);
  ctx.write("epsilon.csv", csv.str());
}

void stage_wang(Context& ctx) {
  const WangSolution& w = ctx.wang();
  ctx.write_json("wang.json", w.to_json());
  ctx.summary["wang"] = {{"alpha", w.alpha}, {"kappa", w.kappa}, {"scaling_defect", w.scaling_defect}};
}

void stage_mu(Context& ctx) {
  const MeasureSpec spec = ctx.measure();
  const DomainSpec d = ctx.domain();
  Thm2Options o;
  o.nodes = ctx.config.grids.back();
  o.doubling.seed = ctx.config.seed;
  o.solver = ctx.config.solver;
  o.M = ctx.config.M.front();
  const Thm2Report r = thm2_pipeline(d, spec, o);
  ctx.write_json("doubling.json", r.doubling.to_json());
  ctx.write("doubling.csv", r.doubling.csv());
  ctx.write_json("mu_pipeline.json", r.to_json());
  ctx.summary["doubling"] = {{"gamma", r.doubling.gamma}, {"beta", r.doubling.beta}};
  ctx.summary["mu_epsilon"] = nan_safe(r.epsilon);
}

void flatten(const json& j, const std::string& prefix, std::map<std::string, json>& out) {
  if (j.is_object()) {
    for (const auto& [k, v] : j.items()) flatten(v, prefix.empty() ? k : prefix + "." + k, out);
  } else if (j.is_array()) {
    for (std::size_t i = 0; i < j.size(); ++i) flatten(j[i], prefix + "[" + std::to_string(i) + "]", out);
  } else {
    out[prefix] = j;
  }
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot read " + p.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path run_dir(const std::string& path) {
  const fs::path p(path);
  return fs::is_directory(p) ? p : p.parent_path();
}

}  // namespace

std::string to_string(Stage s) {
  switch (s) {
    case Stage::Solve: return "solve";
    case Stage::Sections: return "sections";
    case Stage::Cover: return "cover";
    case Stage::Decay: return "decay";
    case Stage::Tails: return "tails";
    case Stage::Epsilon: return "epsilon";
    case Stage::Wang: return "wang";
    case Stage::MuCheck: return "mu-check";
  }
  return "";
}

std::vector<Stage> default_stages(const ExperimentConfig& c) {
  std::vector<Stage> s;
  if (c.problem == Problem::Wang) s.push_back(Stage::Wang);
  s.push_back(Stage::Solve);
  if (c.problem == Problem::Mu) s.push_back(Stage::MuCheck);
  for (Stage t : {Stage::Sections, Stage::Cover, Stage::Decay, Stage::Tails, Stage::Epsilon}) s.push_back(t);
  return s;
}

json RunManifest::to_json() const {
  json t = json::array();
  for (const auto& s : timings) t.push_back({{"stage", s.stage}, {"seconds", s.seconds}});
  return {{"config_hash", config_hash}, {"version", version}, {"selector", selector},
          {"config", config},           {"timings", t},       {"files", files}};
}

RunManifest RunManifest::from_json(const json& j) {
  try {
    RunManifest m;
    m.config_hash = j.at("config_hash").get<std::string>();
    m.version = j.at("version").get<std::string>();
    m.selector = j.at("selector").get<std::string>();
    m.config = j.at("config");
    for (const auto& t : j.at("timings")) m.timings.push_back({t.at("stage"), t.at("seconds")});
    m.files = j.at("files").get<std::vector<std::string>>();
    return m;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::Io, std::string("malformed manifest: ") + e.what());
  }
}

RunManifest RunManifest::load(const std::string& path) {
  fs::path p(path);
  if (fs::is_directory(p)) p /= "manifest.json";
  try {
    return from_json(json::parse(slurp(p)));
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::Io, std::string("manifest is not JSON: ") + e.what());
  }
}

RunManifest run(const ExperimentConfig& config, const std::vector<Stage>& stages) {
  config.validate();
  Context ctx(config);
  for (Stage s : stages) {
    const auto start = std::chrono::steady_clock::now();
    try {
      switch (s) {
        case Stage::Solve: stage_solve(ctx); break;
        case Stage::Sections: stage_sections(ctx); break;
        case Stage::Cover: stage_cover(ctx); break;
        case Stage::Decay: stage_decay(ctx); break;
        case Stage::Tails: stage_tails(ctx); break;
        case Stage::Epsilon: stage_epsilon(ctx); break;
        case Stage::Wang: stage_wang(ctx); break;
        case Stage::MuCheck: stage_mu(ctx); break;
      }
    } catch (const Error& e) {
      if (e.code() == ErrorCode::ConfigError) throw;
      throw StageFailure(s, e.code(), e.what());
    }
    ctx.manifest.timings.push_back(
        {to_string(s), std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count()});
  }
  ctx.summary["selector"] = ctx.manifest.selector;
  ctx.write_json("summary.json", ctx.summary);
  std::ofstream(ctx.out / "manifest.json") << ctx.manifest.to_json().dump(2) << "\n";
  return ctx.manifest;
}

RunManifest run(const ExperimentConfig& config) { return run(config, default_stages(config)); }

json compare(const std::string& run_a, const std::string& run_b) {
  const RunManifest a = RunManifest::load(run_a), b = RunManifest::load(run_b);
  if (a.selector != b.selector)
    throw Error(ErrorCode::IncompatibleManifests, "problems differ: " + a.selector + " vs " + b.selector);
  const fs::path da = run_dir(run_a), db = run_dir(run_b);

  json files = json::object();
  double max_rel = 0.0;
  bool identical = a.files == b.files;
  bool flags_agree = true;
  for (const std::string& name : a.files) {
    if (std::find(b.files.begin(), b.files.end(), name) == b.files.end()) continue;
    const std::string ta = slurp(da / name), tb = slurp(db / name);
    if (ta != tb) identical = false;
    if (fs::path(name).extension() != ".json") {
      files[name] = {{"identical", ta == tb}};
      continue;
    }
    std::map<std::string, json> fa, fb;
    flatten(json::parse(ta), "", fa);
    flatten(json::parse(tb), "", fb);
    json diffs = json::object();
    for (const auto& [key, va] : fa) {
      const auto it = fb.find(key);
      if (it == fb.end()) continue;
      const json& vb = it->second;
      if (va.is_number() && vb.is_number()) {
        const double x = va.get<double>(), y = vb.get<double>();
        if (x == y) continue;
        const double rel = std::abs(x - y) / std::max(std::abs(x), std::abs(y));
        max_rel = std::max(max_rel, rel);
        diffs[key] = {{"a", x}, {"b", y}, {"relative", rel}};
      } else if (va != vb) {
        if (va.is_boolean() && vb.is_boolean()) flags_agree = false;
        diffs[key] = {{"a", va}, {"b", vb}};
      }
    }
    files[name] = {{"identical", ta == tb}, {"differences", diffs}};
  }

  // Side-by-side constants ledger from the two summaries.
  json ledger = json::array();
  const auto has = [](const RunManifest& m, const char* f) {
    return std::find(m.files.begin(), m.files.end(), f) != m.files.end();
  };
  if (has(a, "summary.json") && has(b, "summary.json")) {
    std::map<std::string, json> sa, sb;
    flatten(json::parse(slurp(da / "summary.json")), "", sa);
    flatten(json::parse(slurp(db / "summary.json")), "", sb);
    std::map<std::string, std::pair<json, json>> keys;
    for (const auto& [k, v] : sa) keys[k].first = v;
    for (const auto& [k, v] : sb) keys[k].second = v;
    for (const auto& [k, v] : keys) {
      json row = {{"key", k}, {"a", v.first}, {"b", v.second}};
      if (v.first.is_number() && v.second.is_number()) {
        const double x = v.first.get<double>(), y = v.second.get<double>();
        const double den = std::max(std::abs(x), std::abs(y));
        row["relative"] = den > 0.0 ? std::abs(x - y) / den : 0.0;
      }
      ledger.push_back(row);
    }
  }
  return {{"selector", a.selector},
          {"config_hash", {a.config_hash, b.config_hash}},
          {"identical", identical},
          {"flags_agree", flags_agree},
          {"max_relative_difference", max_rel},
          {"ledger", ledger},
          {"files", files}};
}

}  // namespace malab
