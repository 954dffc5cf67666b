// plasthom command-line front end. Subcommands drive the library modules;
// every invocation writes exactly one RunManifest into --out. Exit codes:
// 0 success, 1 malformed input or violated precondition, 2 numerical
// failure (partial results are still written where they exist).

#include <CLI11.hpp>

#include <cstdio>
#include <exception>
#include <filesystem>
#include <string>
#include <vector>

#include "plasthom/plasthom.hpp"

namespace ph = plasthom;
using ph::json;

namespace {

struct CommonFlags {
  std::string config_path;
  std::string out_dir = ".";
  int jobs = 1;
  std::uint64_t seed = 0;  // 0 = take the config's seed
  std::string mode = "group-exp";
};

void add_common(CLI::App* cmd, CommonFlags& flags, bool need_config = true) {
  auto* opt = cmd->add_option("--config", flags.config_path,
                              "JSON configuration file");
  if (need_config) opt->required();
  cmd->add_option("--out", flags.out_dir, "output directory");
  cmd->add_option("--jobs", flags.jobs, "worker cap for parallel sections");
  cmd->add_option("--seed", flags.seed, "seed override (0 keeps the config)");
  cmd->add_option("--mode", flags.mode,
                  "plastic interpolation mode: geodesic-exact | group-exp");
}

ph::Mat3 mat3_from_flat(const std::vector<double>& v) {
  ph::Mat3 m;
  for (int e = 0; e < 9; ++e) m.a[static_cast<std::size_t>(e)] = v[static_cast<std::size_t>(e)];
  return m;
}

int classify(const ph::Error& e) {
  if (dynamic_cast<const ph::ConfigError*>(&e) != nullptr ||
      dynamic_cast<const ph::NonPositiveDeterminant*>(&e) != nullptr ||
      dynamic_cast<const ph::OutsideK*>(&e) != nullptr ||
      dynamic_cast<const ph::NotTangent*>(&e) != nullptr ||
      dynamic_cast<const ph::EpsNonPositive*>(&e) != nullptr ||
      dynamic_cast<const ph::NotCompactlyContained*>(&e) != nullptr ||
      dynamic_cast<const ph::TableOutOfRange*>(&e) != nullptr ||
      dynamic_cast<const ph::AssumptionViolated*>(&e) != nullptr) {
    return 1;
  }
  return 2;  // NoConvergence, LogDivergence, SingularMatrix, ...
}

// Fresh --out paths are created rather than rejected; writes happen after
// config parsing so a bad config never leaves an empty directory behind.
void ensure_out_dir(const CommonFlags& flags) {
  std::error_code ec;
  std::filesystem::create_directories(flags.out_dir, ec);
  if (ec) {
    throw ph::ConfigError(flags.out_dir + ": cannot create output directory (" +
                          ec.message() + ")");
  }
}

void write_manifest(const CommonFlags& flags, const std::string& command,
                    const json& config,
                    const std::vector<std::string>& outputs,
                    const std::vector<std::uint64_t>& seeds) {
  ph::RunManifest manifest;
  manifest.command = command;
  manifest.config_hash = ph::config_hash(config);
  manifest.input_paths = {flags.config_path};
  manifest.output_paths = outputs;
  manifest.timestamp = ph::RunManifest::now_utc();
  manifest.seeds = seeds;
  manifest.write(flags.out_dir + "/manifest.json");
}

// ---------------------------------------------------------------------------
// whom: the asymptotic cell formula at (F, G).
// ---------------------------------------------------------------------------

int run_whom(const CommonFlags& flags, const std::vector<double>& F_flat,
             const std::vector<double>& G_flat) {
  const json config = ph::load_json_file(flags.config_path);
  ensure_out_dir(flags);
  const ph::MaterialModel model =
      ph::material_from_json(config.at("material"));
  ph::CellProblemConfig cell;
  if (config.contains("cell")) {
    cell = ph::cell_config_from_json(config.at("cell"));
  }
  const ph::Mat3 F = mat3_from_flat(F_flat);
  // det <= 0 surfaces NonPositiveDeterminant before any solve starts.
  const ph::SL3Element G = ph::SL3Element::retracted(mat3_from_flat(G_flat));

  std::vector<std::vector<std::string>> rows;
  json report;
  report["lambdas"] = json::array();
  report["values"] = json::array();
  bool complete = true;
  std::string failure;
  for (double lambda : cell.lambda_ladder) {
    try {
      const ph::WhomCellResult rung =
          ph::whom_cell_full(model, F, G, lambda, cell);
      rows.push_back({ph::format_g17(lambda), ph::format_g17(rung.value),
                      std::to_string(rung.iterations),
                      rung.converged ? "1" : "0"});
      report["lambdas"].push_back(lambda);
      report["values"].push_back(rung.value);
    } catch (const ph::NoConvergence& e) {
      complete = false;
      failure = e.what();
      break;
    }
  }
  if (!report["values"].empty()) {
    report["extrapolated"] =
        ph::aitken_tail(report["values"].get<std::vector<double>>());
    if (report["values"].size() >= 2) {
      const double last = report["values"].back().get<double>();
      const double prev =
          report["values"][report["values"].size() - 2].get<double>();
      report["spread"] =
          std::abs(last - prev) / std::max(std::abs(last), 1e-30);
    }
  }
  report["complete"] = complete;
  if (!complete) report["failure"] = failure;

  const std::string csv_path = flags.out_dir + "/whom.csv";
  const std::string json_path = flags.out_dir + "/whom.json";
  ph::write_csv(csv_path, {"lambda", "value", "iterations", "converged"},
                rows);
  std::ofstream(json_path) << report.dump(2) << "\n";
  write_manifest(flags, "whom", config, {csv_path, json_path}, {});
  if (!complete) {
    std::fprintf(stderr, "numerical failure: %s\n", failure.c_str());
    return 2;
  }
  if (!report["values"].empty()) {
    std::printf("whom = %s\n",
                ph::format_g17(report["extrapolated"].get<double>()).c_str());
  }
  return 0;
}

// ---------------------------------------------------------------------------
// geodesic: shortest discrete path between two SL(3) points.
// ---------------------------------------------------------------------------

int run_geodesic(const CommonFlags& flags, const std::vector<double>& F0_flat,
                 const std::vector<double>& F1_flat, int n) {
  const json config = ph::load_json_file(flags.config_path);
  ensure_out_dir(flags);
  const ph::MaterialModel model =
      ph::material_from_json(config.at("material"));
  const ph::SL3Element F0 =
      ph::SL3Element::retracted(mat3_from_flat(F0_flat));
  const ph::SL3Element F1 =
      ph::SL3Element::retracted(mat3_from_flat(F1_flat));

  ph::GeodesicOptions opts;
  opts.throw_on_cap = false;  // keep the best path; exit 2 signals the cap
  const ph::GeodesicResult res =
      ph::geodesic(model.norm(), F0, F1, n, opts);

  std::vector<std::vector<std::string>> rows;
  for (std::size_t i = 0; i < res.path.nodes.size(); ++i) {
    std::vector<std::string> row{std::to_string(i)};
    for (int e = 0; e < 9; ++e) {
      row.push_back(ph::format_g17(
          res.path.nodes[i].m.a[static_cast<std::size_t>(e)]));
    }
    rows.push_back(std::move(row));
  }
  const std::string csv_path = flags.out_dir + "/geodesic_path.csv";
  const std::string json_path = flags.out_dir + "/geodesic.json";
  ph::write_csv(csv_path,
                {"node", "m00", "m01", "m02", "m10", "m11", "m12", "m20",
                 "m21", "m22"},
                rows);
  json report{{"length", res.length},
              {"iterations", res.iterations},
              {"converged", res.converged},
              {"nodes", n + 1}};
  std::ofstream(json_path) << report.dump(2) << "\n";
  write_manifest(flags, "geodesic", config, {csv_path, json_path}, {});
  std::printf("length = %s\n", ph::format_g17(res.length).c_str());
  if (!res.converged) {
    std::fprintf(stderr,
                 "numerical failure: geodesic iteration cap reached\n");
    return 2;
  }
  return 0;
}

// ---------------------------------------------------------------------------
// gluecheck: fundamental-estimate trials on seeded states.
// ---------------------------------------------------------------------------

int run_gluecheck(const CommonFlags& flags) {
  const json config = ph::load_json_file(flags.config_path);
  ensure_out_dir(flags);
  const ph::MaterialModel model =
      ph::material_from_json(config.at("material"));
  const json& dj = config.at("domain");
  const int d = dj.at("dimension").get<int>();
  std::array<double, 3> origin{0, 0, 0}, extent{1, 1, 1};
  std::array<int, 3> cells{1, 1, 1};
  for (int a = 0; a < d; ++a) {
    const auto ua = static_cast<std::size_t>(a);
    origin[ua] = dj.at("origin")[ua].get<double>();
    extent[ua] = dj.at("extent")[ua].get<double>();
    cells[ua] = dj.at("cells")[ua].get<int>();
  }
  ph::GridDomain dom = ph::GridDomain::box(d, origin, extent, cells);

  auto box_from = [&](const json& b) {
    std::array<double, 3> lo{-1e300, -1e300, -1e300},
        hi{1e300, 1e300, 1e300};
    for (int a = 0; a < d; ++a) {
      const auto ua = static_cast<std::size_t>(a);
      lo[ua] = b.at("lo")[ua].get<double>();
      hi[ua] = b.at("hi")[ua].get<double>();
    }
    return ph::mask_box(dom, lo, hi);
  };
  const auto A_prime = box_from(config.at("A_prime"));
  const auto A = box_from(config.at("A"));
  const auto B = box_from(config.at("B"));

  const double eps = config.value("eps", 0.25);
  const int trials = config.value("trials", 1);
  std::vector<double> sigmas;
  if (config.contains("sigma") && config.at("sigma").is_array()) {
    for (const auto& s : config.at("sigma")) sigmas.push_back(s.get<double>());
  } else {
    sigmas.push_back(config.value("sigma", 0.5));
  }
  const std::uint64_t seed =
      flags.seed != 0 ? flags.seed : config.value("seed", 20240807ull);

  ph::FECheckOptions opts;
  opts.mode = ph::gamma_mode_from_string(flags.mode);
  opts.jobs = flags.jobs;

  std::vector<std::vector<std::string>> rows;
  json jrows = json::array();
  bool all_satisfied = true;
  for (int t = 0; t < trials; ++t) {
    const ph::SeededStates st =
        ph::make_seeded_states(model, dom, seed + static_cast<std::uint64_t>(t));
    for (double sigma : sigmas) {
      const ph::FEReport r =
          ph::fe_check(model, eps, dom, A_prime, A, B, st.y1, st.P1, st.y2,
                       st.P2, sigma, opts);
      all_satisfied = all_satisfied && r.satisfied;
      rows.push_back({std::to_string(t), ph::format_g17(sigma),
                      r.satisfied ? "1" : "0", ph::format_g17(r.lhs.total),
                      ph::format_g17(r.rhs_main),
                      ph::format_g17(r.rhs_cross), std::to_string(r.N),
                      ph::format_g17(r.delta), std::to_string(r.chosen_layer),
                      ph::format_g17(r.M_sigma)});
      jrows.push_back({{"trial", t},
                       {"sigma", sigma},
                       {"satisfied", r.satisfied},
                       {"lhs", r.lhs.total},
                       {"rhs_main", r.rhs_main},
                       {"rhs_cross", r.rhs_cross},
                       {"N", r.N},
                       {"delta", r.delta},
                       {"chosen_layer", r.chosen_layer},
                       {"M_sigma", r.M_sigma}});
    }
  }
  const std::string csv_path = flags.out_dir + "/gluecheck.csv";
  const std::string json_path = flags.out_dir + "/gluecheck.json";
  ph::write_csv(csv_path,
                {"trial", "sigma", "satisfied", "lhs", "rhs_main",
                 "rhs_cross", "N", "delta", "chosen_layer", "M_sigma"},
                rows);
  json report{{"rows", jrows}, {"all_satisfied", all_satisfied}};
  std::ofstream(json_path) << report.dump(2) << "\n";
  write_manifest(flags, "gluecheck", config, {csv_path, json_path}, {seed});
  std::printf("gluecheck: %zu checks, all_satisfied = %s\n", rows.size(),
              all_satisfied ? "true" : "false");
  return 0;
}

// ---------------------------------------------------------------------------
// gamma: the convergence-of-minima experiment.
// ---------------------------------------------------------------------------

int run_gamma(const CommonFlags& flags) {
  const json config = ph::load_json_file(flags.config_path);
  ensure_out_dir(flags);
  ph::ExperimentConfig cfg = ph::experiment_from_json(config);
  if (flags.seed != 0) cfg.seed = flags.seed;
  cfg.jobs = flags.jobs;

  const ph::SL3Element G_center =
      cfg.p_mode == ph::PlasticMode::PinnedIdentity ? ph::SL3Element()
                                                    : cfg.P_bc;
  const ph::WhomTable table =
      ph::WhomTable::build(cfg.model, cfg.F_bc, G_center, cfg.dimension,
                           cfg.table_points, cfg.table_margin, cfg.cell,
                           cfg.jobs);
  const ph::ConvergenceReport report = ph::convergence_table(cfg, table);

  std::vector<std::vector<std::string>> rows, gap_rows;
  json jrows = json::array();
  for (const ph::ConvergenceRow& r : report.rows) {
    rows.push_back({ph::format_g17(r.eps), ph::format_g17(r.min_Feps),
                    ph::format_g17(r.min_Fhom), ph::format_g17(r.gap),
                    std::to_string(r.iterations), r.converged ? "1" : "0"});
    gap_rows.push_back({ph::format_g17(r.eps), ph::format_g17(r.gap)});
    jrows.push_back({{"eps", r.eps},
                     {"min_Feps", r.min_Feps},
                     {"min_Fhom", r.min_Fhom},
                     {"gap", r.gap},
                     {"iterations", r.iterations},
                     {"converged", r.converged},
                     {"wall_ms", r.wall_ms}});
  }
  // The homogenized row closes the table (eps = 0 by convention).
  rows.push_back({ph::format_g17(0.0), ph::format_g17(report.hom.value),
                  ph::format_g17(report.hom.value), ph::format_g17(0.0),
                  std::to_string(report.hom.iterations),
                  report.hom.converged ? "1" : "0"});

  const std::string csv_path = flags.out_dir + "/gamma.csv";
  const std::string gaps_path = flags.out_dir + "/gamma_gaps.csv";
  const std::string json_path = flags.out_dir + "/gamma.json";
  ph::write_csv(csv_path,
                {"eps", "min_Feps", "min_Fhom", "gap", "iterations",
                 "converged"},
                rows);
  ph::write_csv(gaps_path, {"eps", "gap"}, gap_rows);
  json jreport{{"config_hash", ph::config_hash(config)},
               {"tool_version", ph::version_string},
               {"seed", cfg.seed},
               {"rows", jrows},
               {"min_Fhom", report.hom.value},
               {"y_l2_diffs", report.y_l2_diffs},
               {"P_sup_diffs", report.P_sup_diffs},
               {"P_inv_sup_diffs", report.P_inv_sup_diffs}};
  std::ofstream(json_path) << jreport.dump(2) << "\n";
  write_manifest(flags, "gamma", config, {csv_path, gaps_path, json_path},
                 {cfg.seed});

  bool all_converged = report.hom.converged;
  for (const auto& r : report.rows) all_converged = all_converged && r.converged;
  std::printf("min_Fhom = %s, final gap = %s\n",
              ph::format_g17(report.hom.value).c_str(),
              ph::format_g17(report.rows.back().gap).c_str());
  if (!all_converged) {
    std::fprintf(stderr,
                 "numerical failure: a ladder row hit the alternation cap "
                 "(best-so-far written)\n");
    return 2;
  }
  return 0;
}

// ---------------------------------------------------------------------------
// validate: Monte-Carlo assumption checks of a material config.
// ---------------------------------------------------------------------------

int run_validate(const CommonFlags& flags) {
  const json config = ph::load_json_file(flags.config_path);
  ensure_out_dir(flags);
  const ph::MaterialModel model =
      ph::material_from_json(config.at("material"));
  const int samples = config.value("samples", 200);
  const std::uint64_t seed =
      flags.seed != 0 ? flags.seed : config.value("seed", 20240804ull);
  const ph::ValidationReport report =
      ph::validate_assumptions(model, samples, seed);
  std::printf("observed c1 = %s (declared %s)\n",
              ph::format_g17(report.observed_c1).c_str(),
              ph::format_g17(report.declared_c1).c_str());
  std::printf("observed c2 = %s (declared %s)\n",
              ph::format_g17(report.observed_c2).c_str(),
              ph::format_g17(report.declared_c2).c_str());
  std::printf("observed c3 = %s (declared %s)\n",
              ph::format_g17(report.observed_c3).c_str(),
              ph::format_g17(report.declared_c3).c_str());
  json jreport{{"samples", report.samples},
               {"observed_c1", report.observed_c1},
               {"observed_c2", report.observed_c2},
               {"observed_c3", report.observed_c3},
               {"observed_L_H", report.observed_L_H},
               {"declared_c1", report.declared_c1},
               {"declared_c2", report.declared_c2},
               {"declared_c3", report.declared_c3},
               {"declared_L_H", report.declared_L_H}};
  const std::string json_path = flags.out_dir + "/validate.json";
  std::ofstream(json_path) << jreport.dump(2) << "\n";
  write_manifest(flags, "validate", config, {json_path}, {seed});
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"periodic homogenization of finite-strain elastoplasticity"};
  app.set_version_flag("--version", plasthom::version_string);
  app.require_subcommand(1);

  CommonFlags whom_flags, geo_flags, glue_flags, gamma_flags, val_flags;
  std::vector<double> F_flat, G_flat, F0_flat, F1_flat;
  int geodesic_n = 32;

  CLI::App* whom = app.add_subcommand("whom", "asymptotic cell formula");
  add_common(whom, whom_flags);
  whom->add_option("-F", F_flat, "macroscopic F, 9 reals row-major")
      ->expected(9)
      ->required();
  whom->add_option("-G", G_flat, "plastic G, 9 reals row-major (retracted)")
      ->expected(9)
      ->required();

  CLI::App* geo = app.add_subcommand("geodesic", "shortest path in SL(3)");
  add_common(geo, geo_flags);
  geo->add_option("--F0", F0_flat, "start point, 9 reals")->expected(9)->required();
  geo->add_option("--F1", F1_flat, "end point, 9 reals")->expected(9)->required();
  geo->add_option("-n", geodesic_n, "segments in the discrete path");

  CLI::App* glue = app.add_subcommand("gluecheck", "fundamental estimate");
  add_common(glue, glue_flags);

  CLI::App* gamma = app.add_subcommand("gamma", "convergence of minima");
  add_common(gamma, gamma_flags);

  CLI::App* val = app.add_subcommand("validate", "material assumptions");
  add_common(val, val_flags);

  CLI11_PARSE(app, argc, argv);

  try {
    if (whom->parsed()) return run_whom(whom_flags, F_flat, G_flat);
    if (geo->parsed()) return run_geodesic(geo_flags, F0_flat, F1_flat, geodesic_n);
    if (glue->parsed()) return run_gluecheck(glue_flags);
    if (gamma->parsed()) return run_gamma(gamma_flags);
    if (val->parsed()) return run_validate(val_flags);
  } catch (const ph::Error& e) {
    const int code = classify(e);
    std::fprintf(stderr, "%s: %s\n",
                 code == 1 ? "input error" : "numerical failure", e.what());
    return code;
  } catch (const json::exception& e) {
    std::fprintf(stderr, "input error: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 0;
}
