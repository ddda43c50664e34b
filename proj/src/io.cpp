#include "mvpmcmc/io.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "mvpmcmc/error.hpp"

namespace mvpmcmc {

std::string format_double(double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return {buf, r.ptr};
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::Config, "io", "cannot write " + tmp.string());
    out << text;
    if (!out) throw Error(ErrorKind::Config, "io", "write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

void write_csv(const std::filesystem::path& path, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows) {
  std::string s;
  for (std::size_t i = 0; i < header.size(); ++i) s += (i ? "," : "") + header[i];
  s += '\n';
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) s += ',';
      s += format_double(row[i]);
    }
    s += '\n';
  }
  write_text(path, s);
}

std::vector<std::vector<double>> read_numeric_csv(const std::filesystem::path& path, std::vector<std::string>* header) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Config, "config", "cannot open " + path.string());
  std::string line;
  std::vector<std::vector<double>> rows;
  bool first = true;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    if (first) {
      first = false;
      if (header) {
        while (std::getline(ss, cell, ',')) header->push_back(cell);
      }
      continue;
    }
    std::vector<double> row;
    while (std::getline(ss, cell, ',')) {
      double v = 0.0;
      const char* b = cell.data();
      while (b < cell.data() + cell.size() && *b == ' ') ++b;
      const auto r = std::from_chars(b, cell.data() + cell.size(), v);
      if (r.ec != std::errc()) {
        throw Error(ErrorKind::Config, "config", path.string() + ":" + std::to_string(lineno) + ": bad number '" + cell + "'");
      }
      row.push_back(v);
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

Dataset read_dataset_csv(const std::filesystem::path& path) {
  Dataset d;
  d.observations = read_numeric_csv(path);
  return d;
}

}  // namespace mvpmcmc
