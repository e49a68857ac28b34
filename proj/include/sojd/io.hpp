#pragma once

// File formats: CSV with 17 significant digits, atomic writes, run
// manifests.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "sojd/estimators.hpp"
#include "sojd/simulator.hpp"

namespace sojd::io {

inline constexpr const char* kVersion = "0.1.0";

/// Round-trip representation ("%.17g"); NaN is written as "nan".
std::string format_double(double v);

/// Parses a number written by format_double (also accepts "nan", "inf").
double parse_double(std::string_view s);

/// Writes via a temporary sibling file and rename, so readers never see a
/// partial file.
void write_atomic(const std::filesystem::path& path, std::string_view content);

std::string read_file(const std::filesystem::path& path);

/// 64-bit FNV-1a, as 16 lowercase hex digits.
std::string digest(std::string_view bytes);

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::size_t column(std::string_view name) const;  // ConfigError if absent
};

CsvTable parse_csv(std::string_view text);

/// `t,x,y`
std::string path_csv(const FinePath& path);

/// `i,t,y_obs,x_tilde,x_true`; row i carries the quotient ending at i, so
/// row 0 has an empty x_tilde. x_true is empty when unknown.
std::string observations_csv(const ObservationSet& obs);

/// Reads an observation CSV. delta is taken from the t column unless given.
ObservationSet read_observations(const std::filesystem::path& path, std::optional<double> delta = std::nullopt);

/// `x,p_hat,a_hat,b_hat,se_a,se_b,n_eff`
std::string estimates_csv(const EstimateResult& r);

}  // namespace sojd::io
