#include "cli.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

#include "calibeat/decision.hpp"
#include "calibeat/procedures.hpp"
#include "calibeat/report.hpp"
#include "calibeat/rowcol.hpp"
#include "calibeat/scenario.hpp"
#include "calibeat/scores.hpp"
#include "calibeat/transcript.hpp"
#include "parallel.hpp"

namespace calibeat::cli {

namespace {

using nlohmann::ordered_json;

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Parse: return kParse;
    case ErrorKind::Config:
    case ErrorKind::UnknownStrategy:
    case ErrorKind::BadAlpha:
    case ErrorKind::MissingConstant: return kConfig;
    default: return kValidation;
  }
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

void emit(const std::string& text, const std::string& path, std::ostream& out) {
  if (path.empty() || path == "-") {
    out << text;
    return;
  }
  std::ofstream file(path, std::ios::binary);
  if (!file) throw Error(ErrorKind::Config, "cannot write '" + path + "'");
  file << text;
}

void require_format(const std::string& format) {
  if (format != "json" && format != "csv") throw Error(ErrorKind::Config, "format must be json or csv, got '" + format + "'");
}

template <Scalar T>
Utility<T> build_utility(const std::string& spec, const ActionSetPtr& actions) {
  if (spec == "threshold") return Utility<T>::threshold(actions);
  if (spec == "threshold:tie-low") return Utility<T>::threshold(actions, TieRule::Highest);
  if (spec.rfind("rule:", 0) == 0) return Utility<T>::from_rule(make_rule<T>(spec.substr(5), actions));
  std::ifstream in(spec);
  if (!in) throw Error(ErrorKind::Config, "unknown utility '" + spec + "'");
  ordered_json doc;
  try {
    doc = ordered_json::parse(in);
  } catch (const ordered_json::exception& e) {
    throw Error(ErrorKind::Parse, std::string("utility: ") + e.what());
  }
  for (const auto& [key, _] : doc.items()) {
    if (key != "id" && key != "decisions" && key != "payoff") throw Error(ErrorKind::Config, "utility: unknown key '" + key + "'");
  }
  try {
    std::vector<std::vector<T>> pay;
    for (const auto& row : doc.at("payoff")) {
      auto& out = pay.emplace_back();
      for (const auto& v : row) {
        if constexpr (is_exact_v<T>) {
          out.push_back(v.is_string() ? Rational::parse(v.get<std::string>()) : Rational::parse(scalar_str(v.get<double>())));
        } else {
          out.push_back(v.is_string() ? Rational::parse(v.get<std::string>()).to_double() : v.get<double>());
        }
      }
    }
    return Utility<T>::table(doc.value("id", std::string("table")), actions, doc.at("decisions").get<std::vector<std::string>>(),
                             std::move(pay));
  } catch (const ordered_json::exception& e) {
    throw Error(ErrorKind::Parse, std::string("utility: ") + e.what());
  }
}

template <Scalar T>
ScoringRule<T> build_rule(const std::string& id, const ActionSetPtr& actions, const std::string& normalize) {
  auto rule = id.rfind("induced:", 0) == 0 ? make_induced_rule(build_utility<T>(id.substr(8), actions)) : make_rule<T>(id, actions);
  if (normalize == "none") return rule;
  if (normalize == "bounded") return normalize_rule(rule, NormalizeMode::Bounded);
  if (normalize == "lipschitz") return normalize_rule(rule, NormalizeMode::Lipschitz);
  throw Error(ErrorKind::Config, "normalize must be none, bounded or lipschitz");
}

template <Scalar T>
PureBinning resolve_binning(const Transcript<T>& tr, const std::string& name) {
  if (name == "c") return tr.forecast_binning();
  if (name == "b") return tr.reference_binning();
  if (name == "bxc") return joint(tr.reference_binning(), tr.forecast_binning());
  if (name == "const") return PureBinning::constant(tr.size());
  return tr.named_binning(name);
}

std::string format_value(double x) { return scalar_str(x); }
std::string format_value(const Rational& x) { return x.str(); }

// score ---------------------------------------------------------------------

struct ScoreArgs {
  std::string transcript;
  std::string rules = "quadratic,spherical:2";
  std::string binnings = "c,b";
  std::string normalize = "none";
  bool exact = false;
  std::string format = "json";
  std::string out;
};

template <Scalar T>
std::string run_score(const ScoreArgs& args) {
  const auto tr = read_transcript_file<T>(args.transcript);
  if (tr.c.empty()) throw Error(ErrorKind::Validation, "transcript has no forecasts to score");
  std::vector<ScoreReport> reports;
  for (const auto& id : split_list(args.rules)) {
    const auto rule = build_rule<T>(id, tr.actions, args.normalize);
    for (const auto& name : split_list(args.binnings)) {
      reports.push_back(score_report<T>(rule, tr.a, tr.c, name, resolve_binning(tr, name)));
    }
  }
  ordered_json config{{"transcript", args.transcript}, {"rules", args.rules}, {"binning", args.binnings},
                      {"normalize", args.normalize}, {"exact", args.exact}};
  const RunMeta meta{"score", config.dump(), 0, args.exact};
  return args.format == "csv" ? score_reports_csv(reports) : score_reports_json(reports, meta);
}

// simulate ------------------------------------------------------------------

struct SimConfig {
  std::string procedure = "simple";
  std::string adversary = "flip_farthest";
  std::string reference = "random";
  std::size_t bins = 2;
  std::vector<std::string> actions{"0", "1"};
  std::vector<std::size_t> horizons{100, 1000, 10000};
  std::uint64_t seed = 1;
  std::size_t seeds = 1;
  double delta = 0.1;
  std::vector<std::string> rules{"quadratic", "spherical:2"};
  std::string normalize = "none";
  bool exact = false;

  ordered_json to_json() const {
    return {{"procedure", procedure}, {"adversary", adversary}, {"reference", reference}, {"bins", bins},
            {"actions", actions},     {"horizons", horizons},   {"seed", seed},           {"seeds", seeds},
            {"delta", delta},         {"rules", rules},         {"normalize", normalize}, {"exact", exact}};
  }
};

SimConfig read_sim_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Config, "cannot open config '" + path + "'");
  ordered_json doc;
  try {
    doc = ordered_json::parse(in);
  } catch (const ordered_json::exception& e) {
    throw Error(ErrorKind::Parse, std::string("config: ") + e.what());
  }
  if (!doc.is_object()) throw Error(ErrorKind::Config, "config must be an object");
  SimConfig c;
  const auto known = c.to_json();
  for (const auto& [key, _] : doc.items()) {
    if (!known.contains(key)) throw Error(ErrorKind::Config, "config: unknown key '" + key + "'");
  }
  try {
    c.procedure = doc.value("procedure", c.procedure);
    c.adversary = doc.value("adversary", c.adversary);
    c.reference = doc.value("reference", c.reference);
    c.bins = doc.value("bins", c.bins);
    if (doc.contains("actions")) {
      if (doc["actions"].is_number_integer()) {
        c.actions = ActionSet::indexed(doc["actions"].get<std::size_t>())->labels();
      } else {
        c.actions = doc["actions"].get<std::vector<std::string>>();
      }
    }
    c.horizons = doc.value("horizons", c.horizons);
    c.seed = doc.value("seed", c.seed);
    c.seeds = doc.value("seeds", c.seeds);
    c.delta = doc.value("delta", c.delta);
    c.rules = doc.value("rules", c.rules);
    c.normalize = doc.value("normalize", c.normalize);
    c.exact = doc.value("exact", c.exact);
  } catch (const ordered_json::exception& e) {
    throw Error(ErrorKind::Config, std::string("config: ") + e.what());
  }
  return c;
}

void check_sim_config(const SimConfig& c) {
  if (c.procedure != "simple" && c.procedure != "grid") throw Error(ErrorKind::Config, "unknown procedure '" + c.procedure + "'");
  if (c.procedure == "grid" && c.exact) throw Error(ErrorKind::Config, "the grid procedure runs in floating point only");
  if (c.horizons.empty() || c.seeds == 0 || c.bins == 0) throw Error(ErrorKind::Config, "horizons, seeds and bins must be non-empty");
  if (c.rules.empty()) throw Error(ErrorKind::Config, "no rules requested");
  for (auto h : c.horizons) {
    if (h == 0) throw Error(ErrorKind::Config, "horizons must be positive");
  }
  // fail on unknown strategies before any work
  (void)Adversary::make(c.adversary, c.actions.size(), 0);
  (void)ReferenceGenerator::make(c.reference, c.bins, 0);
}

template <Scalar T>
struct SeedRun {
  std::vector<std::size_t> actions;
  PureBinning reference;
  std::vector<Dist<T>> forecasts;
  std::size_t grid_size = 0;
};

template <Scalar T>
SeedRun<T> simulate_seed(const SimConfig& c, const ActionSetPtr& actions, std::size_t horizon, std::uint64_t seed) {
  auto adv = Adversary::make(c.adversary, actions->size(), seed);
  auto ref = ReferenceGenerator::make(c.reference, c.bins, seed ^ 0x5bd1e995ULL);
  if (c.procedure == "grid") {
    if constexpr (is_exact_v<T>) {
      throw Error(ErrorKind::Config, "the grid procedure runs in floating point only");
    } else {
      auto run = run_grid_forecaster(actions, c.delta, horizon, adv, ref, seed);
      return {std::move(run.actions), std::move(run.reference), std::move(run.forecasts), run.grid->size()};
    }
  }
  auto run = run_simple_calibeat<T>(actions, horizon, adv, ref);
  return {std::move(run.actions), std::move(run.reference), std::move(run.forecasts), 0};
}

template <Scalar T>
struct Cell {
  T brier, calibration, refinement;
  std::optional<double> bound;
};

template <Scalar T>
std::string run_simulate(const SimConfig& c, const std::string& format, const std::string& transcript_out) {
  const auto actions = std::make_shared<const ActionSet>(c.actions);
  std::vector<ScoringRule<T>> rules;
  for (const auto& id : c.rules) rules.push_back(build_rule<T>(id, actions, c.normalize));
  const std::size_t horizon = *std::max_element(c.horizons.begin(), c.horizons.end());

  std::vector<SeedRun<T>> runs(c.seeds);
  parallel_for(c.seeds, [&](std::size_t i) { runs[i] = simulate_seed<T>(c, actions, horizon, c.seed + i); });

  if (!transcript_out.empty()) {
    Transcript<T> tr;
    tr.actions = actions;
    tr.a = runs.front().actions;
    tr.c = runs.front().forecasts;
    for (auto id : runs.front().reference.ids) tr.b_labels.push_back(runs.front().reference.labels[id]);
    std::ofstream file(transcript_out);
    if (!file) throw Error(ErrorKind::Config, "cannot write '" + transcript_out + "'");
    write_transcript_jsonl(tr, file);
  }

  // cells indexed (seed, horizon, rule)
  const std::size_t nh = c.horizons.size(), nr = rules.size();
  std::vector<Cell<T>> cells(c.seeds * nh * nr);
  parallel_for(cells.size(), [&](std::size_t idx) {
    const std::size_t s = idx / (nh * nr), h = (idx / nr) % nh, r = idx % nr;
    const auto& run = runs[s];
    const std::size_t t = c.horizons[h];
    const std::span<const std::size_t> a(run.actions.data(), t);
    const std::span<const Dist<T>> f(run.forecasts.data(), t);
    const auto b = binning_prefix(run.reference, t);
    const auto& rule = rules[r];
    Cell<T> cell{brier(rule, a, f), calibration(rule, a, f, joint(b, from_forecasts(f))), refinement(rule, a, b), std::nullopt};
    const double tt = static_cast<double>(t), nb = static_cast<double>(c.bins);
    if (c.procedure == "simple" && rule.declared_lipschitz()) {
      cell.bound = *rule.declared_lipschitz() * 2.0 * nb * (std::log(tt) + 1.0) / tt;
    } else if (c.procedure == "grid" && rule.declared_bound()) {
      const double grid = static_cast<double>(run.grid_size);
      cell.bound = *rule.declared_bound() * std::sqrt(c.delta * c.delta + 2.0 * nb * grid * (std::log(tt) + 1.0) / tt);
    }
    cells[idx] = std::move(cell);
  });

  const auto meta_config = c.to_json().dump();
  const T seeds_t = T(static_cast<long>(c.seeds));
  std::ostringstream csv;
  csv << "t,rule,B,K,R,bound,gap\n";
  ordered_json rows = ordered_json::array();
  for (std::size_t h = 0; h < nh; ++h) {
    for (std::size_t r = 0; r < nr; ++r) {
      T sb(0), sk(0), sr(0);
      std::vector<double> gaps;
      for (std::size_t s = 0; s < c.seeds; ++s) {
        const auto& cell = cells[(s * nh + h) * nr + r];
        sb += cell.brier;
        sk += cell.calibration;
        sr += cell.refinement;
        gaps.push_back(to_double(cell.brier - cell.refinement));
      }
      const T mb = sb / seeds_t, mk = sk / seeds_t, mr = sr / seeds_t;
      const auto bound = cells[h * nr + r].bound;
      csv << c.horizons[h] << ',' << rules[r].id() << ',' << format_value(mb) << ',' << format_value(mk) << ','
          << format_value(mr) << ',' << (bound ? scalar_str(*bound) : "") << ',' << format_value(T(mb - mr)) << '\n';
      double mean = 0, var = 0;
      for (double g : gaps) mean += g;
      mean /= static_cast<double>(gaps.size());
      for (double g : gaps) var += (g - mean) * (g - mean);
      const double sd = gaps.size() > 1 ? std::sqrt(var / static_cast<double>(gaps.size() - 1)) : 0.0;
      ordered_json row{{"t", c.horizons[h]}, {"rule", rules[r].id()}, {"B", to_double(mb)}, {"K", to_double(mk)},
                       {"R", to_double(mr)}, {"gap", to_double(T(mb - mr))}, {"gap_std", sd}};
      row["bound"] = bound ? ordered_json(*bound) : ordered_json(nullptr);
      if constexpr (is_exact_v<T>) row["exact"] = {{"B", mb.str()}, {"K", mk.str()}, {"R", mr.str()}};
      rows.push_back(std::move(row));
    }
  }
  if (format == "csv") return csv.str();
  ordered_json doc{{"command", "simulate"},
                   {"config_hash", hash_hex(config_hash(meta_config))},
                   {"seed", c.seed},
                   {"config", c.to_json()},
                   {"rows", std::move(rows)}};
  if (c.procedure == "grid") doc["grid_size"] = runs.front().grid_size;
  return doc.dump(2) + "\n";
}

// regret --------------------------------------------------------------------

struct RegretArgs {
  std::string transcript;
  std::string utility = "threshold";
  std::string binning = "c";
  bool exact = false;
  bool brute_force = true;
  std::string out;
};

template <Scalar T>
std::string run_regret(const RegretArgs& args, std::ostream& err) {
  const auto tr = read_transcript_file<T>(args.transcript);
  if (tr.c.empty()) throw Error(ErrorKind::Validation, "transcript has no forecasts");
  const auto u = build_utility<T>(args.utility, tr.actions);
  const auto binning = resolve_binning(tr, args.binning);
  const auto r = regret(u, std::span<const std::size_t>(tr.a), std::span<const Dist<T>>(tr.c), binning, args.brute_force);
  if (r.brute_force_skipped) {
    err << "notice: " << u.decision_count() << "^" << binning.bin_count()
        << " maps exceed the brute-force limit; reporting the per-bin argmax only\n";
  }
  ordered_json config{{"transcript", args.transcript}, {"utility", args.utility}, {"binning", args.binning},
                      {"exact", args.exact}, {"brute_force", args.brute_force}};
  ordered_json doc{{"command", "regret"}, {"config_hash", hash_hex(config_hash(config.dump()))}, {"seed", 0},
                   {"utility", u.id()},   {"binning", args.binning},                           {"t", tr.size()}};
  doc["avg_utility"] = to_double(r.avg_utility);
  doc["best_remap_utility"] = to_double(r.best_remap_utility);
  doc["regret"] = to_double(r.regret);
  doc["matched_calibration"] = to_double(r.matched_calibration);
  doc["residual"] = to_double(r.residual);
  if constexpr (is_exact_v<T>) {
    doc["exact"] = {{"regret", r.regret.str()}, {"matched_calibration", r.matched_calibration.str()}, {"residual", r.residual.str()}};
  }
  if (u.finite()) {
    ordered_json remap = ordered_json::object();
    for (std::size_t i = 0; i < r.remap.size(); ++i) {
      if (r.remap[i]) remap[binning.labels[i]] = u.decisions()[*r.remap[i]];
    }
    doc["remap"] = std::move(remap);
  }
  if (r.brute_force_best) {
    doc["brute_force"] = {{"best_remap_utility", to_double(*r.brute_force_best)}};
  } else {
    doc["brute_force"] = r.brute_force_skipped ? "skipped" : "off";
  }
  err << "residual " << format_value(r.residual) << '\n';
  return doc.dump(2) + "\n";
}

// appendix ------------------------------------------------------------------

struct AppendixArgs {
  std::string scenario;
  std::string search;
  std::size_t seeds = 1000;
  std::uint64_t seed = 1;
  bool allow_degenerate = false;
  std::optional<std::size_t> sweep;
  std::string format = "json";
  std::string plot;
  std::string out;
};

ordered_json shape_json(const Constancy& c) {
  return {{"distinct_entries", c.distinct_entries}, {"nondegenerate", c.nondegenerate}, {"row_constant", c.row_constant},
          {"column_constant", c.column_constant}};
}

std::string sweep_csv(const std::vector<SweepPoint>& points) {
  std::ostringstream csv;
  csv << "sample";
  const std::size_t k = points.empty() ? 0 : points.front().lambda.size();
  for (std::size_t i = 0; i < k; ++i) csv << ",lambda_" << i;
  csv << ",C_Q,R_Q,E_Q,calibeats,joint,proper\n";
  for (std::size_t s = 0; s < points.size(); ++s) {
    const auto& p = points[s];
    csv << s;
    for (double l : p.lambda) csv << ',' << scalar_str(l);
    csv << ',' << scalar_str(p.c_q) << ',' << scalar_str(p.r_q) << ',' << scalar_str(p.e_q) << ',' << p.calibeats << ','
        << p.joint << ',' << p.proper << '\n';
  }
  return csv.str();
}

std::string run_scenario(const AppendixArgs& args) {
  const auto sc = read_scenario_file(args.scenario);
  Theorem12Options opt;
  opt.allow_degenerate = args.allow_degenerate || sc.allow_degenerate;
  opt.sweep = args.sweep.value_or(sc.sweep.value_or(1000));
  opt.seed = sc.seed.value_or(args.seed);
  opt.record = !args.plot.empty() || args.format == "csv";
  const auto rep = theorem12_scenario(sc.averages, sc.lambda, opt);

  std::vector<std::vector<Point>> x;
  for (const auto& row : sc.averages) {
    auto& out = x.emplace_back();
    for (const auto& d : row) out.emplace_back(d.weights().begin(), d.weights().end());
  }
  const auto t15 = theorem15_check(x, opt.sweep, opt.seed);

  if (!args.plot.empty()) emit(sweep_csv(rep.points), args.plot, std::cout);
  if (args.format == "csv") return sweep_csv(rep.points);

  ordered_json config{{"scenario", args.scenario}, {"allow_degenerate", opt.allow_degenerate}, {"sweep", opt.sweep},
                      {"seed", opt.seed}};
  ordered_json rules = ordered_json::object();
  for (const auto& [name, ok] : rep.flags.per_rule) rules[name] = ok;
  ordered_json calibrated = ordered_json::array();
  for (const auto& c : rep.calibrated_c) calibrated.push_back(c);
  ordered_json doc{{"command", "appendix"},
                   {"config_hash", hash_hex(config_hash(config.dump()))},
                   {"seed", opt.seed},
                   {"scenario", sc.name},
                   {"shape", shape_json(rep.shape)},
                   {"flags",
                    {{"calibeat", rep.flags.calibeats}, {"joint", rep.flags.calibeats_joint}, {"proper", rep.flags.proper_calibeats}}},
                   {"per_rule", std::move(rules)},
                   {"quadratic", {{"E", rep.quadratic.e}, {"R", rep.quadratic.r}, {"C", rep.quadratic.c}}},
                   {"calibrated_forecasts", std::move(calibrated)}};
  ordered_json sweep{{"samples", rep.sweep_samples},
                     {"joint_without_proper", rep.joint_without_proper},
                     {"equivalence_consistent", rep.equivalence_consistent}};
  sweep["calibeat_without_joint"] = rep.calibeat_without_joint ? ordered_json(rep.calibeat_without_joint->w) : ordered_json(nullptr);
  sweep["calibeat_without_proper"] = rep.calibeat_without_proper ? ordered_json(rep.calibeat_without_proper->w) : ordered_json(nullptr);
  doc["sweep"] = std::move(sweep);
  doc["u_statements"] = {{"trials", t15.trials},
                         {"premise_hits", t15.premise_hits},
                         {"u1_failures", t15.u1_failures},
                         {"u2_failures", t15.u2_failures},
                         {"u3_failures", t15.u3_failures},
                         {"witness", t15.witness.has_value()},
                         {"observed", t15.observed_u},
                         {"predicted", t15.predicted_u},
                         {"consistent", t15.consistent}};
  return doc.dump(2) + "\n";
}

struct SearchResult {
  bool premise = false, u1 = true, u2 = true, u3 = true;
};

// Random X of the requested shape with a random W, one per seed.
WeightedMatrix<double> search_instance(const std::string& shape, std::uint64_t seed) {
  Rng rng(seed);
  const std::size_t rows = 2 + rng.below(3), cols = 2 + rng.below(3), dim = 1 + rng.below(3);
  auto point = [&] {
    Point p(dim);
    for (auto& v : p) v = static_cast<double>(rng.between(-6, 6)) / 4.0;
    return p;
  };
  std::vector<Point> col_pts, row_pts, x;
  for (std::size_t j = 0; j < cols; ++j) col_pts.push_back(point());
  for (std::size_t i = 0; i < rows; ++i) row_pts.push_back(point());
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < cols; ++j) {
      if (shape == "column-constant") x.push_back(col_pts[j]);
      else if (shape == "row-constant") x.push_back(row_pts[i]);
      else x.push_back(point());
    }
  }
  std::vector<double> w(rows * cols);
  double total = 0;
  while (total == 0) {
    total = 0;
    for (auto& v : w) total += (v = rng.coin(0.3) ? 0.0 : rng.exponential());
  }
  for (auto& v : w) v /= total;
  return WeightedMatrix<double>::make(rows, cols, std::move(x), std::move(w));
}

std::string run_search(const AppendixArgs& args) {
  if (args.search != "general" && args.search != "column-constant" && args.search != "row-constant") {
    throw Error(ErrorKind::Config, "search shape must be general, column-constant or row-constant");
  }
  std::vector<SearchResult> results(args.seeds);
  parallel_for(args.seeds, [&](std::size_t s) {
    const auto u = u_checks(search_instance(args.search, args.seed + s));
    results[s] = {u.premise, u.u1, u.u2, u.u3};
  });
  std::size_t premise = 0, f1 = 0, f2 = 0, f3 = 0, moreover = 0;
  for (const auto& r : results) {
    // C = E <= R is claimed for every W when X is column-constant
    moreover += !(r.u2 && r.u3);
    if (!r.premise) continue;
    ++premise;
    f1 += !r.u1;
    f2 += !r.u2;
    f3 += !r.u3;
  }
  ordered_json config{{"search", args.search}, {"seeds", args.seeds}, {"seed", args.seed}};
  ordered_json doc{{"command", "appendix"},     {"config_hash", hash_hex(config_hash(config.dump()))},
                   {"seed", args.seed},          {"search", args.search},
                   {"seeds", args.seeds},        {"premise_hits", premise},
                   {"u1_failures", f1},          {"u2_failures", f2},
                   {"u3_failures", f3}};
  if (args.search == "column-constant") doc["moreover_violations"] = moreover;
  return doc.dump(2) + "\n";
}

// replay --------------------------------------------------------------------

struct ReplayArgs {
  std::string example;
  std::size_t repeat = 1;
  std::size_t horizon = 100;
  bool exact = false;
  std::string out;
};

template <Scalar T>
std::string run_replay(const ReplayArgs& args) {
  Transcript<T> tr;
  if (args.example == "example1") {
    if (args.repeat == 0) throw Error(ErrorKind::Config, "repeat must be positive");
    tr = replay_example_1<T>(args.repeat);
  } else if (args.example == "example52") {
    // one reference bin, the adversary plays against the announced forecast
    auto adv = Adversary::make("flip_farthest", 2, 0);
    auto ref = ReferenceGenerator::make("constant", 1, 0);
    const auto run = run_simple_calibeat<T>(ActionSet::binary(), args.horizon, adv, ref);
    tr.actions = ActionSet::binary();
    tr.a = run.actions;
    tr.c = run.forecasts;
    tr.b_labels.assign(run.actions.size(), run.reference.labels.front());
  } else {
    throw Error(ErrorKind::Config, "unknown example '" + args.example + "' (example1, example52)");
  }
  std::ostringstream text;
  write_transcript_jsonl(tr, text);
  return text.str();
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Calibeating scores, procedures and checks"};
  app.require_subcommand(1);

  ScoreArgs score;
  auto* score_cmd = app.add_subcommand("score", "Score a transcript under one or more rules and binnings");
  score_cmd->add_option("transcript", score.transcript, "JSON-lines or CSV transcript")->required();
  auto* o_score_rules = score_cmd->add_option("--rules", score.rules, "Comma-separated rule ids (exact default: quadratic)");
  score_cmd->add_option("--binning", score.binnings, "Comma-separated binnings: c, b, bxc, const or a named binning");
  score_cmd->add_option("--normalize", score.normalize, "none, bounded or lipschitz");
  score_cmd->add_flag("--exact", score.exact, "Rational arithmetic");
  score_cmd->add_option("--format", score.format, "json or csv");
  score_cmd->add_option("--out", score.out, "Output path (default stdout)");

  SimConfig sim;
  std::string sim_config, sim_format = "csv", sim_out, sim_transcript, sim_horizons, sim_rules;
  std::size_t sim_arity = 0;
  auto* sim_cmd = app.add_subcommand("simulate", "Run a forecasting procedure against an adversary and report scores");
  sim_cmd->add_option("--config", sim_config, "JSON config; flags given explicitly override it");
  auto* o_proc = sim_cmd->add_option("--procedure", sim.procedure, "simple or grid");
  auto* o_adv = sim_cmd->add_option("--adversary", sim.adversary, "flip_farthest, pattern:0110, stochastic[:p0,p1,...]");
  auto* o_ref = sim_cmd->add_option("--reference", sim.reference, "random, cyclic, constant or blocks:k");
  auto* o_bins = sim_cmd->add_option("--bins", sim.bins, "Number of reference bins");
  auto* o_arity = sim_cmd->add_option("--actions", sim_arity, "Number of actions");
  auto* o_hor = sim_cmd->add_option("--horizons", sim_horizons, "Comma-separated horizons");
  auto* o_seed = sim_cmd->add_option("--seed", sim.seed, "First seed");
  auto* o_seeds = sim_cmd->add_option("--seeds", sim.seeds, "Number of seeds averaged per row");
  auto* o_delta = sim_cmd->add_option("--delta", sim.delta, "Grid precision");
  auto* o_rules = sim_cmd->add_option("--rules", sim_rules, "Comma-separated rule ids");
  auto* o_norm = sim_cmd->add_option("--normalize", sim.normalize, "none, bounded or lipschitz");
  bool sim_exact = false;
  auto* o_exact = sim_cmd->add_flag("--exact", sim_exact, "Rational arithmetic (simple procedure only)");
  sim_cmd->add_option("--format", sim_format, "csv or json");
  sim_cmd->add_option("--out", sim_out, "Output path (default stdout)");
  sim_cmd->add_option("--transcript", sim_transcript, "Also write the first seed's transcript here");

  RegretArgs reg;
  bool no_brute = false;
  auto* reg_cmd = app.add_subcommand("regret", "Regret of best-replying to forecasts versus calibration of the induced rule");
  reg_cmd->add_option("transcript", reg.transcript, "Transcript path")->required();
  reg_cmd->add_option("--utility", reg.utility, "threshold, threshold:tie-low, rule:<id> or a JSON payoff table");
  reg_cmd->add_option("--binning", reg.binning, "c, bxc or a named binning refining the forecasts");
  reg_cmd->add_flag("--exact", reg.exact, "Rational arithmetic");
  reg_cmd->add_flag("--no-brute-force", no_brute, "Skip the exhaustive check over all remaps");
  reg_cmd->add_option("--out", reg.out, "Output path (default stdout)");

  AppendixArgs apx;
  std::size_t apx_sweep = 0;
  auto* apx_cmd = app.add_subcommand("appendix", "Row/column snapshot verdicts and randomized searches");
  apx_cmd->add_option("scenario", apx.scenario, "Scenario JSON");
  apx_cmd->add_option("--search", apx.search, "general, column-constant or row-constant");
  apx_cmd->add_option("--seeds", apx.seeds, "Instances for --search");
  apx_cmd->add_option("--seed", apx.seed, "First seed");
  apx_cmd->add_flag("--allow-degenerate", apx.allow_degenerate, "Accept matrices with at most two distinct entries");
  auto* o_sweep = apx_cmd->add_option("--sweep", apx_sweep, "Frequency samples for the scenario sweep");
  apx_cmd->add_option("--format", apx.format, "json (verdict) or csv (sweep plot data)");
  apx_cmd->add_option("--plot", apx.plot, "Also write sweep plot data here");
  apx_cmd->add_option("--out", apx.out, "Output path (default stdout)");

  ReplayArgs rep;
  auto* rep_cmd = app.add_subcommand("replay", "Write the transcript of a worked example");
  rep_cmd->add_option("example", rep.example, "example1 or example52")->required();
  rep_cmd->add_option("--repeat", rep.repeat, "Periodic copies of example1");
  rep_cmd->add_option("--horizon", rep.horizon, "Periods of example52");
  rep_cmd->add_flag("--exact", rep.exact, "Write exact fractions");
  rep_cmd->add_option("--out", rep.out, "Output path (default stdout)");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::Success& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kParse;
  }

  try {
    if (score_cmd->parsed()) {
      require_format(score.format);
      // spherical rules have no exact form
      if (score.exact && !o_score_rules->count()) score.rules = "quadratic";
      emit(score.exact ? run_score<Rational>(score) : run_score<double>(score), score.out, out);
    } else if (sim_cmd->parsed()) {
      require_format(sim_format);
      SimConfig c = sim_config.empty() ? SimConfig{} : read_sim_config(sim_config);
      if (o_proc->count()) c.procedure = sim.procedure;
      if (o_adv->count()) c.adversary = sim.adversary;
      if (o_ref->count()) c.reference = sim.reference;
      if (o_bins->count()) c.bins = sim.bins;
      if (o_arity->count()) c.actions = ActionSet::indexed(sim_arity)->labels();
      if (o_seed->count()) c.seed = sim.seed;
      if (o_seeds->count()) c.seeds = sim.seeds;
      if (o_delta->count()) c.delta = sim.delta;
      if (o_norm->count()) c.normalize = sim.normalize;
      if (o_exact->count()) c.exact = sim_exact;
      if (o_rules->count()) c.rules = split_list(sim_rules);
      if (o_hor->count()) {
        c.horizons.clear();
        for (const auto& h : split_list(sim_horizons)) {
          try {
            c.horizons.push_back(std::stoul(h));
          } catch (const std::exception&) {
            throw Error(ErrorKind::Config, "bad horizon '" + h + "'");
          }
        }
      }
      check_sim_config(c);
      emit(c.exact ? run_simulate<Rational>(c, sim_format, sim_transcript) : run_simulate<double>(c, sim_format, sim_transcript),
           sim_out, out);
      if (sim_format == "csv") {
        err << "config_hash " << hash_hex(config_hash(c.to_json().dump())) << " seed " << c.seed << '\n';
      }
    } else if (reg_cmd->parsed()) {
      reg.brute_force = !no_brute;
      emit(reg.exact ? run_regret<Rational>(reg, err) : run_regret<double>(reg, err), reg.out, out);
    } else if (apx_cmd->parsed()) {
      require_format(apx.format);
      if (o_sweep->count()) apx.sweep = apx_sweep;
      if (!apx.search.empty()) {
        emit(run_search(apx), apx.out, out);
      } else if (!apx.scenario.empty()) {
        emit(run_scenario(apx), apx.out, out);
      } else {
        throw Error(ErrorKind::Config, "appendix needs a scenario file or --search");
      }
    } else if (rep_cmd->parsed()) {
      emit(rep.exact ? run_replay<Rational>(rep) : run_replay<double>(rep), rep.out, out);
    }
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kValidation;
  }
  return kOk;
}

}  // namespace calibeat::cli
