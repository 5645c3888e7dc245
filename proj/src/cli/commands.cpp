#include <chrono>
#include <cmath>
#include <ctime>
#include <iomanip>
#include <ostream>

#include "json.hpp"
#include "mvdwls/cli.hpp"
#include "mvdwls/metrics.hpp"
#include "mvdwls/rankcorr.hpp"
#include "mvdwls/rng.hpp"

namespace mvdwls::cli {

using json = nlohmann::ordered_json;

int exit_code_for(const Error& e) noexcept {
  switch (family_of(e.code())) {
    case ErrorFamily::Usage: return kExitUsage;
    case ErrorFamily::Input: return kExitInput;
    case ErrorFamily::Data: return kExitData;
    case ErrorFamily::Estimation: return kExitEstimation;
  }
  return kExitInternal;
}

std::filesystem::path resolve_output_dir(const CliConfig& config, const std::string& command) {
  if (config.output_dir) return *config.output_dir;
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream name;
  name << "mvdwls-" << command << '-' << std::put_time(&tm, "%Y%m%d-%H%M%S");
  return name.str();
}

namespace {

void ensure_dir(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::IoError, "cannot create " + dir.string() + ": " + ec.message());
}

json number(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json vector_json(const Eigen::VectorXd& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(number(v(i)));
  return out;
}

json test_json(const linreg::TestResult& t) {
  return {{"statistic", number(t.statistic)}, {"df", t.df}, {"p_value", number(t.p_value)},
          {"reject_at_05", t.reject_at_05}};
}

json model_json(const Dataset& data, const MvdFit& fit) {
  json out;
  out["method"] = fit.method == Method::Univariate ? "M1" : "M2";
  out["beta"] = vector_json(fit.fit.beta);
  out["homoscedastic_fallback"] = fit.homoscedastic_fallback;
  if (fit.model) {
    const auto& combo = fit.model->combo;
    out["k"] = vector_json(combo.k());
    out["k_scaled"] = vector_json(combo.scaled_k());
    if (data.p() >= 2) out["k_ratio"] = number(combo.ratio(1, 0));
    out["rs_abs"] = number(combo.rs_abs());
    out["m_hat"] = number(fit.model->m);
    out["sigma2"] = number(fit.model->sigma2);
  } else {
    out["m_hat"] = 0.0;
  }
  if (fit.method == Method::Univariate) {
    out["selected_variable"] = data.names()[static_cast<std::size_t>(fit.selected_column)];
    json rejected = json::array();
    for (auto j : fit.rejected_columns) rejected.push_back(data.names()[static_cast<std::size_t>(j)]);
    out["rejected_variables"] = rejected;
  } else {
    out["iterations"] = fit.iterations;
  }
  out["boundary_solution"] = fit.boundary_solution;
  out["loglik"] = number(fit.loglik);
  out["mae"] = number((fit.fit.fitted - data.y()).cwiseAbs().mean());
  out["rse"] = fit.fit.df_resid > 0 ? number(metrics::rse(fit.fit)) : json(nullptr);
  return out;
}

std::string fmt(double v, int digits = 4) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(digits) << v;
  return s.str();
}

SolverConfig seeded_solver(const CliConfig& config) {
  SolverConfig cfg = config.solver;
  cfg.optimizer_seed = rng::derive_seed(config.seed, 0, rng::Purpose::Optimizer);
  cfg.validate();
  return cfg;
}

LoadedData load_for_command(const std::filesystem::path& input, const CliConfig& config) {
  auto loaded = load_csv(input, config);
  if (config.stepwise) loaded.data = linreg::stepwise_select(loaded.data);
  return loaded;
}

}  // namespace

FitOutputs cmd_fit(const std::filesystem::path& input, const CliConfig& config, std::ostream& console) {
  const auto cfg = seeded_solver(config);
  const auto loaded = load_for_command(input, config);
  const auto& data = loaded.data;
  if (data.p() < 1) throw Error(ErrorCode::InvalidArgument, "no features left to model");

  const auto ols = linreg::ols_fit(data);
  const auto white = linreg::white_test(data, ols);
  const Eigen::VectorXd abs_resid = ols.residuals.cwiseAbs();
  const Eigen::VectorXd vifs = linreg::vif(data);

  json report;
  report["schema_version"] = 1;
  report["command"] = "fit";
  json in;
  in["file"] = input.filename().string();
  in["n"] = data.n();
  in["p"] = data.p();
  in["response"] = data.response_name();
  in["features"] = std::vector<std::string>(data.names().begin() + 1, data.names().end());
  in["standardized"] = loaded.transform.applied;
  if (loaded.transform.applied) {
    in["transform"] = {{"y_mean", loaded.transform.y_mean},
                       {"y_sd", loaded.transform.y_sd},
                       {"feature_sd", loaded.transform.feature_sd}};
  }
  in["stepwise"] = config.stepwise;
  report["input"] = in;
  report["seed"] = config.seed;
  report["white_test"] = test_json(white);

  json vif_json = json::object();
  for (Eigen::Index j = 0; j < data.p(); ++j) vif_json[data.names()[static_cast<std::size_t>(j + 1)]] = number(vifs(j));
  report["vif"] = vif_json;

  console << "White test: statistic " << fmt(white.statistic) << " on " << white.df << " df, p-value "
          << fmt(white.p_value) << (white.reject_at_05 ? " (heteroscedastic at 0.05)" : " (no evidence at 0.05)")
          << '\n';
  console << "Spearman correlation of each feature with |OLS residuals|:\n";
  console << "  variable            r_s       p-value\n";
  json spearman_rows = json::array();
  for (Eigen::Index j = 1; j <= data.p(); ++j) {
    const auto& name = data.names()[static_cast<std::size_t>(j)];
    json row{{"variable", name}};
    try {
      const double r = rankcorr::spearman(data.X().col(j), abs_resid);
      const auto t = rankcorr::spearman_pvalue(r, static_cast<int>(data.n()));
      row["r_s"] = r;
      row["p_value"] = t.p_value;
      console << "  " << std::left << std::setw(18) << name << std::right << std::setw(8) << fmt(r)
              << std::setw(14) << fmt(t.p_value) << '\n';
    } catch (const Error& e) {
      row["r_s"] = nullptr;
      row["p_value"] = nullptr;
      row["error"] = e.what();
      console << "  " << std::left << std::setw(18) << name << "  undefined (" << to_string(e.code()) << ")\n";
    }
    spearman_rows.push_back(row);
  }
  report["spearman"] = spearman_rows;

  json ols_json{{"beta", vector_json(ols.beta)},
                {"mae", number(ols.residuals.cwiseAbs().mean())},
                {"rse", ols.df_resid > 0 ? number(metrics::rse(ols)) : json(nullptr)}};
  report["ols"] = ols_json;

  json models;
  std::optional<MvdFit> m1, m2;
  for (const auto method : {Method::Univariate, Method::Multivariate}) {
    const char* key = method == Method::Univariate ? "M1" : "M2";
    try {
      auto fit = method == Method::Univariate ? uvd_wls_fit(data, cfg) : mvd_wls_fit(data, cfg);
      models[key] = model_json(data, fit);
      (method == Method::Univariate ? m1 : m2) = std::move(fit);
    } catch (const Error& e) {
      models[key] = {{"method", key}, {"error", {{"code", std::string(to_string(e.code()))}, {"message", e.what()}}}};
    }
  }
  report["models"] = models;

  const bool fallback = !white.reject_at_05 || (m2 && m2->homoscedastic_fallback);
  report["homoscedastic_fallback"] = fallback;
  report["recommended"] = fallback ? "OLS" : (m2 ? "M2" : "M1");

  console << "\nMethod  beta" << std::string(40, ' ') << "MAE      RSE\n";
  auto print_row = [&](const char* label, const FitResult& f) {
    std::ostringstream beta;
    beta << '(';
    for (Eigen::Index i = 0; i < f.beta.size(); ++i) beta << (i ? ", " : "") << fmt(f.beta(i));
    beta << ')';
    console << std::left << std::setw(8) << label << std::setw(44) << beta.str() << std::right
            << fmt((f.fitted - data.y()).cwiseAbs().mean()) << "   "
            << (f.df_resid > 0 ? fmt(metrics::rse(f)) : std::string("NA")) << '\n';
  };
  print_row("OLS", ols);
  if (m1) print_row("M1", m1->fit);
  else console << "M1      failed: " << models["M1"]["error"]["message"].get<std::string>() << '\n';
  if (m2) print_row("M2", m2->fit);
  else console << "M2      failed: " << models["M2"]["error"]["message"].get<std::string>() << '\n';
  if (m1 && m1->model) {
    console << "M1 weights: " << data.names()[static_cast<std::size_t>(m1->selected_column)] << "^-m, m = "
            << fmt(m1->model->m, 2) << '\n';
  }
  if (m2 && m2->model) {
    console << "M2 weights: (x'k)^-m, k = (";
    for (Eigen::Index i = 0; i < m2->model->combo.k().size(); ++i) {
      console << (i ? ", " : "") << fmt(m2->model->combo.k()(i));
    }
    console << "), m = " << fmt(m2->model->m) << ", |r_s| = " << fmt(m2->model->combo.rs_abs()) << '\n';
  }
  if (fallback) {
    console << "HomoscedasticFallback: no usable heteroscedasticity; OLS coefficients reported above.\n";
  }

  const auto dir = resolve_output_dir(config, "fit");
  ensure_dir(dir);
  FitOutputs out;
  out.json = report.dump(2) + "\n";
  out.report_json = dir / "report.json";
  simlab::write_file(out.report_json, out.json);

  std::vector<simlab::Series> series;
  simlab::Series actual{"actual", {}, {}};
  for (Eigen::Index i = 0; i < data.n(); ++i) {
    actual.x.push_back(static_cast<double>(i + 1));
    actual.y.push_back(data.y()(i));
  }
  series.push_back(actual);
  auto add_fitted = [&](const char* label, const FitResult& f) {
    simlab::Series s{label, actual.x, {}};
    for (Eigen::Index i = 0; i < data.n(); ++i) s.y.push_back(f.fitted(i));
    series.push_back(std::move(s));
  };
  if (m1) add_fitted("M1 fitted", m1->fit);
  if (m2) add_fitted("M2 fitted", m2->fit);
  out.overlay_svg = dir / "fit_overlay.svg";
  simlab::write_file(out.overlay_svg,
                     simlab::line_chart_svg("Actual vs fitted", "observation", data.response_name(), series));
  console << "Wrote " << out.report_json.string() << " and " << out.overlay_svg.string() << '\n';
  return out;
}

std::vector<simlab::SimReport> cmd_simulate(const SimulateOptions& options, const CliConfig& config,
                                            std::ostream& console) {
  if (options.replications < 1) throw Error(ErrorCode::InvalidArgument, "--replications must be at least 1");
  if (!options.all && !options.scenario) throw Error(ErrorCode::InvalidArgument, "give --scenario or --all");
  if (!options.all && options.n < 10) throw Error(ErrorCode::InvalidArgument, "--n must be at least 10");
  SolverConfig cfg = config.solver;
  cfg.validate();

  std::vector<simlab::SimScenario> cells;
  const std::vector<int> scenarios = options.all ? std::vector<int>{1, 2, 3} : std::vector<int>{*options.scenario};
  const std::vector<int> sizes = options.all ? std::vector<int>{30, 60, 90} : std::vector<int>{options.n};
  for (int sc : scenarios) {
    for (int n : sizes) {
      simlab::SimScenario s;
      s.form = simlab::variance_form_from_int(sc);
      s.n = n;
      s.R = options.replications;
      s.seed = config.seed;
      s.validate();
      cells.push_back(s);
    }
  }

  std::vector<simlab::SimReport> reports;
  console << "scenario  n    coef   M1 |bias|   M1 MSE     M2 |bias|   M2 MSE\n";
  for (const auto& s : cells) {
    auto rep = simlab::run_replications(s, cfg);
    if (rep.m1.R > 0) {
      for (Eigen::Index c = 0; c < 3; ++c) {
        console << std::setw(8) << simlab::to_int(s.form) << std::setw(5) << s.n << "   beta" << c << std::setw(11)
                << fmt(rep.m1.bias_abs(c)) << std::setw(11) << fmt(rep.m1.mse(c)) << std::setw(12)
                << fmt(rep.m2.bias_abs(c)) << std::setw(11) << fmt(rep.m2.mse(c)) << '\n';
      }
    }
    console << "          k2/k1 median " << fmt(rep.k_ratio_median) << ", mean m " << fmt(rep.m_hat_mean)
            << ", MAE M1 " << fmt(rep.m1.mae_y) << " M2 " << fmt(rep.m2.mae_y) << ", failures " << rep.failures
            << ", fallbacks " << rep.fallbacks << '\n';
    reports.push_back(std::move(rep));
  }
  const auto dir = resolve_output_dir(config, "simulate");
  const auto files = simlab::emit_artifacts(reports, dir);
  console << "Wrote " << files.size() << " files to " << dir.string() << '\n';
  return reports;
}

simlab::CvReport cmd_crossval(const std::filesystem::path& input, int repeats, const CliConfig& config,
                              std::ostream& console) {
  if (repeats < 1) throw Error(ErrorCode::InvalidArgument, "--repeats must be at least 1");
  SolverConfig cfg = config.solver;
  cfg.validate();
  const auto loaded = load_for_command(input, config);
  auto report = simlab::crossval(loaded.data, repeats, config.seed, cfg);

  const auto dir = resolve_output_dir(config, "crossval");
  const auto csv = simlab::emit_cv(report, dir);
  json summary{{"schema_version", 1},
               {"command", "crossval"},
               {"file", input.filename().string()},
               {"n", loaded.data.n()},
               {"p", loaded.data.p()},
               {"repeats", report.repeats},
               {"failures", report.failures},
               {"seed", config.seed},
               {"mean_sse_m1", number(report.mean_sse_m1)},
               {"mean_sse_m2", number(report.mean_sse_m2)}};
  simlab::write_file(dir / "cv_summary.json", summary.dump(2) + "\n");

  console << "Mean test SSE over " << (report.repeats - report.failures) << " repeats: M1 "
          << fmt(report.mean_sse_m1, 3) << ", M2 " << fmt(report.mean_sse_m2, 3) << '\n';
  console << "Lower mean SSE: " << (report.mean_sse_m2 < report.mean_sse_m1 ? "M2" : "M1") << '\n';
  if (report.failures > 0) console << report.failures << " repeat(s) failed and were excluded\n";
  console << "Wrote " << csv.string() << '\n';
  return report;
}

}  // namespace mvdwls::cli
