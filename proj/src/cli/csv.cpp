#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "mvdwls/cli.hpp"

namespace mvdwls::cli {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  std::string out = s.substr(b, e - b + 1);
  if (out.size() >= 2 && out.front() == '"' && out.back() == '"') out = out.substr(1, out.size() - 2);
  return out;
}

std::vector<std::string> split_row(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  bool quoted = false;
  for (char c : line) {
    if (c == '"') quoted = !quoted;
    if (c == ',' && !quoted) {
      cells.push_back(trim(cell));
      cell.clear();
    } else {
      cell += c;
    }
  }
  cells.push_back(trim(cell));
  return cells;
}

std::size_t resolve_column(const std::string& ref, const std::vector<std::string>& header) {
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (header[c] == ref) return c;
  }
  std::size_t idx = 0;
  const auto [ptr, ec] = std::from_chars(ref.data(), ref.data() + ref.size(), idx);
  if (ec == std::errc() && ptr == ref.data() + ref.size() && idx < header.size()) return idx;
  throw Error(ErrorCode::MissingColumn, "column '" + ref + "' is not in the header");
}

double sample_sd(const Eigen::VectorXd& v) {
  const double mean = v.mean();
  return std::sqrt((v.array() - mean).square().sum() / static_cast<double>(v.size() - 1));
}

}  // namespace

LoadedData load_csv(const std::filesystem::path& path, const CliConfig& config) {
  if (!std::filesystem::exists(path)) throw Error(ErrorCode::FileNotFound, path.string());
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());

  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorCode::ParseError, "missing header row", 0);
  if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
  const auto header = split_row(line);

  const std::size_t response = config.response_column.empty() ? header.size() - 1
                                                                : resolve_column(config.response_column, header);
  std::vector<std::size_t> features;
  if (config.feature_columns.empty()) {
    for (std::size_t c = 0; c < header.size(); ++c) {
      if (c != response) features.push_back(c);
    }
  } else {
    for (const auto& f : config.feature_columns) {
      const auto c = resolve_column(f, header);
      if (c == response) throw Error(ErrorCode::InvalidArgument, "response column listed as a feature");
      features.push_back(c);
    }
  }
  if (features.empty()) throw Error(ErrorCode::InvalidArgument, "no feature columns selected");

  std::vector<std::vector<double>> rows;
  std::vector<long> blank_rows;
  long row = 0;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    ++row;
    const auto cells = split_row(line);
    std::vector<double> values;
    bool blank = false;
    auto parse = [&](std::size_t c) {
      if (c >= cells.size() || cells[c].empty() || cells[c] == "NA") {
        blank = true;
        return 0.0;
      }
      double v = 0.0;
      const auto& s = cells[c];
      const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
      if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v)) {
        throw Error(ErrorCode::NonNumericCell,
                    "row " + std::to_string(row) + ", column '" + header[c] + "': '" + s + "'", row);
      }
      return v;
    };
    for (const auto c : features) values.push_back(parse(c));
    values.push_back(parse(response));
    if (blank) {
      blank_rows.push_back(row);
      continue;
    }
    rows.push_back(std::move(values));
  }
  if (!blank_rows.empty()) {
    std::string list;
    for (std::size_t i = 0; i < blank_rows.size(); ++i) list += (i ? ", " : "") + std::to_string(blank_rows[i]);
    throw Error(ErrorCode::ParseError, "missing values in row(s) " + list, blank_rows.front());
  }

  const auto n = static_cast<Eigen::Index>(rows.size());
  const auto p = static_cast<Eigen::Index>(features.size());
  Eigen::MatrixXd regressors(n, p);
  Eigen::VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < p; ++j) regressors(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
    y(i) = rows[static_cast<std::size_t>(i)].back();
  }
  if (n < p + 2) throw Error(ErrorCode::DegenerateSample, "need at least p + 2 complete rows");

  Standardization transform;
  if (config.standardize) {
    transform.applied = true;
    transform.y_mean = y.mean();
    transform.y_sd = sample_sd(y);
    if (!(transform.y_sd > 0.0)) throw Error(ErrorCode::DegenerateSample, "response is constant");
    y = (y.array() - transform.y_mean) / transform.y_sd;
    // Features are scaled but not centred: a centred block has no positive
    // combination to serve as a variance driver.
    for (Eigen::Index j = 0; j < p; ++j) {
      const double sd = sample_sd(regressors.col(j));
      if (!(sd > 0.0)) throw Error(ErrorCode::DegenerateSample, "feature '" + header[features[static_cast<std::size_t>(j)]] + "' is constant");
      regressors.col(j) /= sd;
      transform.feature_sd.push_back(sd);
    }
  }

  std::vector<std::string> names;
  for (const auto c : features) names.push_back(header[c]);
  return {Dataset::from_regressors(std::move(y), regressors, std::move(names), header[response]), transform};
}

void write_csv(const Dataset& data, const std::filesystem::path& path) {
  std::ostringstream out;
  for (Eigen::Index j = 1; j <= data.p(); ++j) out << data.names()[static_cast<std::size_t>(j)] << ',';
  out << data.response_name() << '\n';
  char buf[40];
  for (Eigen::Index i = 0; i < data.n(); ++i) {
    for (Eigen::Index j = 1; j <= data.p(); ++j) {
      std::snprintf(buf, sizeof buf, "%.17g", data.X()(i, j));
      out << buf << ',';
    }
    std::snprintf(buf, sizeof buf, "%.17g", data.y()(i));
    out << buf << '\n';
  }
  simlab::write_file(path, out.str());
}

}  // namespace mvdwls::cli
