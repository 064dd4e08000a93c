#pragma once

#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace gmleb {

//! I/O failures that should map to a usage/IO exit status.
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

//! Read a file of newline-delimited decimal reals. Blank lines and lines
//! starting with '#' are skipped; anything else must parse fully as a number.
inline std::vector<double> read_value_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open: " + path);
  std::vector<double> values;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    // Trim trailing CR and surrounding spaces.
    while (!line.empty() && (line.back() == '\r' || line.back() == ' ' || line.back() == '\t')) {
      line.pop_back();
    }
    std::size_t start = line.find_first_not_of(" \t");
    if (start == std::string::npos) continue;
    if (line[start] == '#') continue;
    try {
      std::size_t used = 0;
      const double v = std::stod(line.substr(start), &used);
      if (start + used != line.size()) throw std::invalid_argument("trailing garbage");
      values.push_back(v);
    } catch (const std::exception&) {
      throw IoError(path + ":" + std::to_string(lineno) + ": not a number: '" + line + "'");
    }
  }
  if (values.empty()) throw IoError(path + ": no numeric values found");
  return values;
}

inline void write_value_lines(const std::vector<double>& values, std::ostream& os) {
  os.precision(17);
  for (double v : values) os << v << '\n';
}

}  // namespace gmleb
