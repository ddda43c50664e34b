#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "mvpmcmc/core.hpp"

namespace mvpmcmc {

/// Shortest round-trip decimal representation (locale independent).
std::string format_double(double v);

/// Writes `header` and `rows` as comma-separated values, via a temporary file
/// that is renamed into place.
void write_csv(const std::filesystem::path& path, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows);
void write_text(const std::filesystem::path& path, const std::string& text);

/// One observation per row; the header row is skipped.
Dataset read_dataset_csv(const std::filesystem::path& path);
std::vector<std::vector<double>> read_numeric_csv(const std::filesystem::path& path, std::vector<std::string>* header = nullptr);

}  // namespace mvpmcmc
