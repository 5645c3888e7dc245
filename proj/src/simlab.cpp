#include "mvdwls/simlab.hpp"

#include <algorithm>
#include <atomic>
#include <boost/random/exponential_distribution.hpp>
#include <boost/random/normal_distribution.hpp>
#include <boost/random/uniform_real_distribution.hpp>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <numeric>
#include <sstream>
#include <thread>

#include "mvdwls/rng.hpp"

namespace mvdwls::simlab {

namespace {

// Runs body(i) for i in [0, count) on all hardware threads. Each index owns
// its output slot, so the result does not depend on scheduling.
template <class Body>
void parallel_for(int count, Body&& body) {
  const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  const int workers = static_cast<int>(std::min<unsigned>(hw, static_cast<unsigned>(std::max(count, 1))));
  if (workers <= 1) {
    for (int i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(workers));
  for (int t = 0; t < workers; ++t) {
    pool.emplace_back([&] {
      for (int i = next++; i < count; i = next++) body(i);
    });
  }
  for (auto& th : pool) th.join();
}

double median(std::vector<double> v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(v.begin(), v.end());
  const auto mid = v.size() / 2;
  return v.size() % 2 == 1 ? v[mid] : 0.5 * (v[mid - 1] + v[mid]);
}

}  // namespace

VarianceForm variance_form_from_int(int id) {
  if (id < 1 || id > 3) throw Error(ErrorCode::InvalidArgument, "scenario must be 1, 2 or 3");
  return static_cast<VarianceForm>(id);
}

int to_int(VarianceForm form) noexcept { return static_cast<int>(form); }

void SimScenario::validate() const {
  if (n < 10) throw Error(ErrorCode::InvalidArgument, "scenario sample size must be at least 10");
  if (R < 1) throw Error(ErrorCode::InvalidArgument, "replication count must be at least 1");
  variance_form_from_int(to_int(form));
}

double SimScenario::variance(double x1, double x2) const {
  double f = 0.0;
  switch (form) {
    case VarianceForm::S1: f = x1 + 3.0 * x2; break;
    case VarianceForm::S2: f = x1; break;
    case VarianceForm::S3: f = x1 + 3.0 * x2 + x1 * x2; break;
  }
  return 0.01 * f * f;
}

Dataset gen_scenario(const SimScenario& s, int replicate) {
  s.validate();
  if (replicate < 0 || replicate >= s.R) throw Error(ErrorCode::InvalidArgument, "replicate out of range");
  const auto rep = static_cast<std::uint64_t>(replicate);
  rng::Stream design(s.seed, rep, rng::Purpose::Design);
  rng::Stream noise(s.seed, rep, rng::Purpose::Noise);
  boost::random::uniform_real_distribution<double> unif(5.0, 15.0);
  boost::random::exponential_distribution<double> expo(1.0);
  boost::random::normal_distribution<double> normal(0.0, 1.0);

  Eigen::MatrixXd regressors(s.n, 2);
  Eigen::VectorXd y(s.n);
  for (int i = 0; i < s.n; ++i) {
    const double x1 = unif(design);
    const double x2 = expo(design);
    regressors(i, 0) = x1;
    regressors(i, 1) = x2;
    y(i) = s.beta_true(0) + s.beta_true(1) * x1 + s.beta_true(2) * x2 + std::sqrt(s.variance(x1, x2)) * normal(noise);
  }
  return Dataset::from_regressors(std::move(y), regressors, {"x1", "x2"});
}

SimReport run_replications(const SimScenario& s, const SolverConfig& cfg) {
  s.validate();
  cfg.validate();
  SimReport report;
  report.scenario = s;
  report.replicates.resize(static_cast<std::size_t>(s.R));

  parallel_for(s.R, [&](int r) {
    auto& rec = report.replicates[static_cast<std::size_t>(r)];
    try {
      const auto data = gen_scenario(s, r);
      SolverConfig local = cfg;
      local.optimizer_seed = rng::derive_seed(s.seed, static_cast<std::uint64_t>(r), rng::Purpose::Optimizer);
      const auto m1 = uvd_wls_fit(data, local);
      const auto m2 = mvd_wls_fit(data, local);
      rec.beta_m1 = m1.fit.beta;
      rec.beta_m2 = m2.fit.beta;
      rec.mae_m1 = (m1.fit.fitted - data.y()).cwiseAbs().mean();
      rec.mae_m2 = (m2.fit.fitted - data.y()).cwiseAbs().mean();
      rec.m_hat_m1 = m1.m();
      rec.m_hat_m2 = m2.m();
      rec.fallback = m2.homoscedastic_fallback;
      rec.k_ratio = m2.model ? m2.model->combo.ratio(1, 0) : std::numeric_limits<double>::quiet_NaN();
      rec.ok = true;
    } catch (const std::exception& e) {
      rec.ok = false;
      rec.error = e.what();
    }
  });

  std::vector<Eigen::Index> used;
  for (int r = 0; r < s.R; ++r) {
    const auto& rec = report.replicates[static_cast<std::size_t>(r)];
    if (!rec.ok) {
      ++report.failures;
      continue;
    }
    used.push_back(r);
    if (rec.fallback) ++report.fallbacks;
  }

  const auto R = static_cast<Eigen::Index>(used.size());
  const Eigen::VectorXd truth = s.beta_true;
  auto fill = [&](metrics::MetricsReport& out, bool first) {
    out.R = R;
    out.n = s.n;
    if (R == 0) return;
    Eigen::MatrixXd est(R, 3);
    double mae_sum = 0.0;
    for (Eigen::Index k = 0; k < R; ++k) {
      const auto& rec = report.replicates[static_cast<std::size_t>(used[static_cast<std::size_t>(k)])];
      est.row(k) = (first ? rec.beta_m1 : rec.beta_m2).transpose();
      mae_sum += first ? rec.mae_m1 : rec.mae_m2;
    }
    out.bias_abs = metrics::abs_bias(est, truth);
    out.mse = metrics::mse(est, truth);
    // Every replicate has the same n, so the mean of per-replicate MAEs is the pooled MAE.
    out.mae_y = mae_sum / static_cast<double>(R);
  };
  fill(report.m1, true);
  fill(report.m2, false);

  std::vector<double> ratios;
  double m_sum = 0.0, m1_sum = 0.0;
  int m_count = 0;
  for (const auto r : used) {
    const auto& rec = report.replicates[static_cast<std::size_t>(r)];
    m1_sum += rec.m_hat_m1;
    if (rec.fallback) continue;
    ratios.push_back(rec.k_ratio);
    m_sum += rec.m_hat_m2;
    ++m_count;
  }
  report.k_ratio_median = median(ratios);
  report.m_hat_mean = m_count > 0 ? m_sum / m_count : std::numeric_limits<double>::quiet_NaN();
  report.m_hat_m1_mean = R > 0 ? m1_sum / static_cast<double>(R) : std::numeric_limits<double>::quiet_NaN();
  return report;
}

CvReport crossval(const Dataset& data, int repeats, std::uint64_t seed, const SolverConfig& cfg) {
  return crossval(data, repeats, seed, cfg, uvd_wls_fit, mvd_wls_fit);
}

CvReport crossval(const Dataset& data, int repeats, std::uint64_t seed, const SolverConfig& cfg,
                  const Estimator& first, const Estimator& second) {
  cfg.validate();
  if (repeats < 1) throw Error(ErrorCode::InvalidArgument, "repeats must be at least 1");
  const auto n = data.n();
  if (n < 2 * (data.p() + 2)) {
    throw Error(ErrorCode::SplitTooSmall, "each half needs at least p + 2 observations");
  }
  CvReport report;
  report.repeats = repeats;
  report.per_repeat.resize(static_cast<std::size_t>(repeats));

  parallel_for(repeats, [&](int r) {
    auto& out = report.per_repeat[static_cast<std::size_t>(r)];
    const auto rep = static_cast<std::uint64_t>(r);
    rng::Stream split(seed, rep, rng::Purpose::Split);
    std::vector<Eigen::Index> idx(static_cast<std::size_t>(n));
    std::iota(idx.begin(), idx.end(), Eigen::Index{0});
    for (auto i = idx.size() - 1; i > 0; --i) {
      const auto j = std::min<std::size_t>(i, static_cast<std::size_t>(split.uniform01() * static_cast<double>(i + 1)));
      std::swap(idx[i], idx[j]);
    }
    const auto half = idx.begin() + static_cast<std::ptrdiff_t>(n / 2);
    std::vector<Eigen::Index> train(idx.begin(), half), test(half, idx.end());
    std::sort(train.begin(), train.end());
    std::sort(test.begin(), test.end());
    try {
      const auto train_set = data.select_rows(train);
      const auto test_set = data.select_rows(test);
      SolverConfig local = cfg;
      local.optimizer_seed = rng::derive_seed(seed, rep, rng::Purpose::Optimizer);
      const auto a = first(train_set, local);
      const auto b = second(train_set, local);
      out.sse_m1 = metrics::sse(test_set.X() * a.fit.beta, test_set.y());
      out.sse_m2 = metrics::sse(test_set.X() * b.fit.beta, test_set.y());
      out.ok = true;
    } catch (const Error&) {
      out.ok = false;
    }
  });

  double s1 = 0.0, s2 = 0.0;
  int ok = 0;
  for (const auto& rep : report.per_repeat) {
    if (!rep.ok) {
      ++report.failures;
      continue;
    }
    s1 += rep.sse_m1;
    s2 += rep.sse_m2;
    ++ok;
  }
  report.mean_sse_m1 = ok > 0 ? s1 / ok : std::numeric_limits<double>::quiet_NaN();
  report.mean_sse_m2 = ok > 0 ? s2 / ok : std::numeric_limits<double>::quiet_NaN();
  return report;
}

std::string format_number(double v) {
  if (std::isnan(v)) return "NA";
  if (std::isinf(v)) return v > 0 ? "Inf" : "-Inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

namespace {

std::string escape_xml(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string fixed(double v, int digits = 2) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

}  // namespace

std::string line_chart_svg(const std::string& title, const std::string& x_label, const std::string& y_label,
                           const std::vector<Series>& series) {
  static constexpr const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"};
  constexpr double kW = 800, kH = 500, kLeft = 80, kRight = 160, kTop = 50, kBottom = 60;
  double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin, ymin = xmin, ymax = -xmin;
  for (const auto& s : series) {
    for (double v : s.x) { xmin = std::min(xmin, v); xmax = std::max(xmax, v); }
    for (double v : s.y) {
      if (!std::isfinite(v)) continue;
      ymin = std::min(ymin, v);
      ymax = std::max(ymax, v);
    }
  }
  if (!std::isfinite(xmin)) { xmin = 0; xmax = 1; }
  if (!std::isfinite(ymin)) { ymin = 0; ymax = 1; }
  if (xmax == xmin) { xmin -= 0.5; xmax += 0.5; }
  if (ymax == ymin) { ymin -= 0.5; ymax += 0.5; }
  const double pad = 0.05 * (ymax - ymin);
  ymin -= pad;
  ymax += pad;
  const double pw = kW - kLeft - kRight, ph = kH - kTop - kBottom;
  auto sx = [&](double v) { return kLeft + (v - xmin) / (xmax - xmin) * pw; };
  auto sy = [&](double v) { return kTop + (1.0 - (v - ymin) / (ymax - ymin)) * ph; };

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 800 500\" width=\"800\" height=\"500\">\n"
      << "<rect x=\"0\" y=\"0\" width=\"800\" height=\"500\" fill=\"white\"/>\n"
      << "<text x=\"400\" y=\"28\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"16\">"
      << escape_xml(title) << "</text>\n"
      << "<rect x=\"" << fixed(kLeft) << "\" y=\"" << fixed(kTop) << "\" width=\"" << fixed(pw) << "\" height=\""
      << fixed(ph) << "\" fill=\"none\" stroke=\"black\"/>\n";
  for (int t = 0; t <= 4; ++t) {
    const double xv = xmin + (xmax - xmin) * t / 4.0;
    const double yv = ymin + (ymax - ymin) * t / 4.0;
    svg << "<text x=\"" << fixed(sx(xv)) << "\" y=\"" << fixed(kTop + ph + 18)
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">" << format_number(xv) << "</text>\n";
    svg << "<text x=\"" << fixed(kLeft - 6) << "\" y=\"" << fixed(sy(yv) + 4)
        << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">" << fixed(yv, 4) << "</text>\n";
    svg << "<line x1=\"" << fixed(kLeft) << "\" y1=\"" << fixed(sy(yv)) << "\" x2=\"" << fixed(kLeft + pw)
        << "\" y2=\"" << fixed(sy(yv)) << "\" stroke=\"#dddddd\"/>\n";
  }
  svg << "<text x=\"" << fixed(kLeft + pw / 2) << "\" y=\"" << fixed(kH - 15)
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\">" << escape_xml(x_label) << "</text>\n"
      << "<text x=\"18\" y=\"" << fixed(kTop + ph / 2) << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
      << "font-size=\"13\" transform=\"rotate(-90 18 " << fixed(kTop + ph / 2) << ")\">" << escape_xml(y_label)
      << "</text>\n";

  for (std::size_t s = 0; s < series.size(); ++s) {
    const char* color = kColors[s % std::size(kColors)];
    svg << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"";
    bool first = true;
    for (std::size_t i = 0; i < series[s].x.size() && i < series[s].y.size(); ++i) {
      if (!std::isfinite(series[s].y[i])) continue;
      svg << (first ? "" : " ") << fixed(sx(series[s].x[i])) << "," << fixed(sy(series[s].y[i]));
      first = false;
    }
    svg << "\"/>\n";
    const double ly = kTop + 20 + 22 * static_cast<double>(s);
    svg << "<line x1=\"" << fixed(kW - kRight + 15) << "\" y1=\"" << fixed(ly) << "\" x2=\"" << fixed(kW - kRight + 40)
        << "\" y2=\"" << fixed(ly) << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n"
        << "<text x=\"" << fixed(kW - kRight + 46) << "\" y=\"" << fixed(ly + 4)
        << "\" font-family=\"sans-serif\" font-size=\"12\">" << escape_xml(series[s].label) << "</text>\n";
  }
  svg << "</svg>\n";
  return svg.str();
}

void write_file(const std::filesystem::path& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot open " + path.string() + " for writing");
  out << contents;
  out.close();
  if (!out) throw Error(ErrorCode::IoError, "failed writing " + path.string());
}

std::vector<std::filesystem::path> emit_artifacts(const std::vector<SimReport>& reports,
                                                  const std::filesystem::path& dir) {
  if (reports.empty()) throw Error(ErrorCode::InvalidArgument, "no simulation reports to emit");

  std::ostringstream t13, t4, f1;
  t13 << "scenario,n,coefficient,method,abs_bias,mse\n";
  t4 << "scenario,n,k_ratio,m_hat\n";
  f1 << "scenario,n,method,mae\n";
  std::map<int, std::vector<const SimReport*>> by_scenario;
  for (const auto& rep : reports) {
    const int sc = to_int(rep.scenario.form);
    by_scenario[sc].push_back(&rep);
    for (int method = 1; method <= 2; ++method) {
      const auto& m = method == 1 ? rep.m1 : rep.m2;
      for (Eigen::Index c = 0; c < 3; ++c) {
        const bool have = m.R > 0;
        t13 << sc << ',' << rep.scenario.n << ",beta" << c << ",M" << method << ','
            << format_number(have ? m.bias_abs(c) : std::nan("")) << ','
            << format_number(have ? m.mse(c) : std::nan("")) << '\n';
      }
    }
    t4 << sc << ',' << rep.scenario.n << ',' << format_number(rep.k_ratio_median) << ','
       << format_number(rep.m_hat_mean) << '\n';
    f1 << sc << ',' << rep.scenario.n << ",M1," << format_number(rep.m1.R > 0 ? rep.m1.mae_y : std::nan("")) << '\n'
       << sc << ',' << rep.scenario.n << ",M2," << format_number(rep.m2.R > 0 ? rep.m2.mae_y : std::nan("")) << '\n';
  }

  std::vector<std::pair<std::filesystem::path, std::string>> files{
      {dir / "table1_3.csv", t13.str()}, {dir / "table4.csv", t4.str()}, {dir / "fig1.csv", f1.str()}};
  for (auto& [sc, reps] : by_scenario) {
    std::sort(reps.begin(), reps.end(), [](auto a, auto b) { return a->scenario.n < b->scenario.n; });
    Series s1{"M1", {}, {}}, s2{"M2", {}, {}};
    for (const auto* r : reps) {
      s1.x.push_back(r->scenario.n);
      s2.x.push_back(r->scenario.n);
      s1.y.push_back(r->m1.R > 0 ? r->m1.mae_y : std::nan(""));
      s2.y.push_back(r->m2.R > 0 ? r->m2.mae_y : std::nan(""));
    }
    files.emplace_back(dir / ("fig1_scenario" + std::to_string(sc) + ".svg"),
                       line_chart_svg("MAE by sample size, scenario " + std::to_string(sc), "n", "MAE", {s1, s2}));
  }

  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::IoError, "cannot create " + dir.string() + ": " + ec.message());
  std::vector<std::filesystem::path> written;
  for (const auto& [path, contents] : files) {
    write_file(path, contents);
    written.push_back(path);
  }
  return written;
}

std::filesystem::path emit_cv(const CvReport& report, const std::filesystem::path& dir) {
  if (report.per_repeat.empty()) throw Error(ErrorCode::InvalidArgument, "empty cross-validation report");
  std::ostringstream out;
  out << "repeat,sse_m1,sse_m2\n";
  for (std::size_t r = 0; r < report.per_repeat.size(); ++r) {
    const auto& rep = report.per_repeat[r];
    out << r << ',' << format_number(rep.ok ? rep.sse_m1 : std::nan("")) << ','
        << format_number(rep.ok ? rep.sse_m2 : std::nan("")) << '\n';
  }
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::IoError, "cannot create " + dir.string() + ": " + ec.message());
  const auto path = dir / "cv.csv";
  write_file(path, out.str());
  return path;
}

}  // namespace mvdwls::simlab
