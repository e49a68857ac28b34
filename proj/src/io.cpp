#include "sojd/io.hpp"

#include <cerrno>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <system_error>

#include "sojd/errors.hpp"

namespace sojd::io {

namespace fs = std::filesystem;

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  const int len = std::snprintf(buf, sizeof buf, "%.17g", v);
  return std::string(buf, static_cast<std::size_t>(len));
}

double parse_double(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  if (s == "nan" || s == "NaN" || s.empty()) return std::nan("");
  const std::string str(s);
  char* end = nullptr;
  errno = 0;
  const double v = std::strtod(str.c_str(), &end);
  if (end != str.c_str() + str.size()) throw ConfigError("not a number: '" + str + "'");
  return v;
}

void write_atomic(const fs::path& path, std::string_view content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw ConfigError("cannot open '" + tmp.string() + "' for writing");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) throw ConfigError("write to '" + tmp.string() + "' failed");
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) throw ConfigError("cannot move '" + tmp.string() + "' into place: " + ec.message());
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read '" + path.string() + "'");
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

std::string digest(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::size_t CsvTable::column(std::string_view name) const {
  for (std::size_t i = 0; i < header.size(); ++i)
    if (header[i] == name) return i;
  throw ConfigError("CSV has no column '" + std::string(name) + "'");
}

CsvTable parse_csv(std::string_view text) {
  CsvTable t;
  std::size_t pos = 0;
  bool first = true;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::size_t s = 0;
    for (;;) {
      const std::size_t c = line.find(',', s);
      fields.emplace_back(line.substr(s, c == std::string_view::npos ? std::string_view::npos : c - s));
      if (c == std::string_view::npos) break;
      s = c + 1;
    }
    if (first) {
      t.header = std::move(fields);
      first = false;
    } else {
      if (fields.size() != t.header.size()) {
        throw ConfigError("CSV row " + std::to_string(t.rows.size() + 1) + " has " + std::to_string(fields.size()) +
                          " fields, header has " + std::to_string(t.header.size()));
      }
      t.rows.push_back(std::move(fields));
    }
  }
  if (first) throw ConfigError("CSV is empty");
  return t;
}

std::string path_csv(const FinePath& path) {
  std::string out = "t,x,y\n";
  out.reserve(path.x.size() * 64);
  for (std::size_t k = 0; k < path.x.size(); ++k) {
    out += format_double(path.times[k]);
    out += ',';
    out += format_double(path.x[k]);
    out += ',';
    out += format_double(path.y[k]);
    out += '\n';
  }
  return out;
}

std::string observations_csv(const ObservationSet& obs) {
  std::string out = "i,t,y_obs,x_tilde,x_true\n";
  const bool has_true = obs.x_true.size() == obs.y_obs.size();
  for (std::size_t i = 0; i < obs.y_obs.size(); ++i) {
    out += std::to_string(i);
    out += ',';
    out += format_double(static_cast<double>(i) * obs.delta);
    out += ',';
    out += format_double(obs.y_obs[i]);
    out += ',';
    if (i > 0) out += format_double(obs.x_tilde[i - 1]);
    out += ',';
    if (has_true) out += format_double(obs.x_true[i]);
    out += '\n';
  }
  return out;
}

ObservationSet read_observations(const fs::path& path, std::optional<double> delta) {
  const CsvTable t = parse_csv(read_file(path));
  const std::size_t cy = t.column("y_obs");
  std::vector<double> y;
  std::vector<double> x_true;
  std::optional<std::size_t> ct;
  std::optional<std::size_t> cx;
  for (std::size_t i = 0; i < t.header.size(); ++i) {
    if (t.header[i] == "t") ct = i;
    if (t.header[i] == "x_true") cx = i;
  }
  bool all_true = cx.has_value();
  for (const auto& row : t.rows) {
    y.push_back(parse_double(row[cy]));
    if (!std::isfinite(y.back())) throw ConfigError("non-finite y_obs in '" + path.string() + "'");
    if (cx) {
      if (row[*cx].empty()) all_true = false;
      else x_true.push_back(parse_double(row[*cx]));
    }
  }
  if (!all_true) x_true.clear();
  double d = 0.0;
  if (delta) {
    d = *delta;
  } else {
    if (!ct || t.rows.size() < 2) throw ConfigError("cannot infer the sampling step; pass --delta");
    const double t0 = parse_double(t.rows[0][*ct]);
    const double tn = parse_double(t.rows.back()[*ct]);
    d = (tn - t0) / static_cast<double>(t.rows.size() - 1);
    // Prefer the neighbouring double that regenerates the written times
    // exactly, so re-estimation sees the step the data were produced with.
    auto regenerates = [&](double c) {
      for (std::size_t i = 0; i < t.rows.size(); ++i)
        if (t0 + static_cast<double>(i) * c != parse_double(t.rows[i][*ct])) return false;
      return true;
    };
    double lo = d, hi = d;
    for (int k = 0; k < 4; ++k) {
      lo = std::nextafter(lo, 0.0);
      hi = std::nextafter(hi, 1e300);
    }
    for (double c = lo; c <= hi; c = std::nextafter(c, 1e300)) {
      if (regenerates(c)) {
        d = c;
        break;
      }
    }
  }
  if (!(d > 0.0) || !std::isfinite(d)) throw ConfigError("sampling step must be positive");
  return ObservationSet::from_integrated(d, std::move(y), std::move(x_true));
}

std::string estimates_csv(const EstimateResult& r) {
  std::string out = "x,p_hat,a_hat,b_hat,se_a,se_b,n_eff\n";
  for (std::size_t i = 0; i < r.grid.size(); ++i) {
    const double vals[] = {r.grid[i], r.p_hat[i], r.a_hat[i], r.b_hat[i], r.se_a[i], r.se_b[i], r.n_eff[i]};
    for (std::size_t k = 0; k < 7; ++k) {
      if (k) out += ',';
      out += format_double(vals[k]);
    }
    out += '\n';
  }
  return out;
}

}  // namespace sojd::io
