#include "betaflow/io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <vector>

#include "betaflow/errors.hpp"

namespace betaflow {

std::string fmt17(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::stringstream ss(line);
  while (std::getline(ss, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_field(const std::string& field, std::size_t line_no) {
  const char* begin = field.c_str();
  char* end = nullptr;
  const double v = std::strtod(begin, &end);
  if (end == begin || *end != '\0')
    throw data_error("panel csv: malformed number '" + field + "' at line " +
                     std::to_string(line_no));
  return v;
}

}  // namespace

LogPricePanel read_panel_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw data_error("panel csv: cannot open '" + path + "'");

  std::string line;
  if (!std::getline(in, line)) throw data_error("panel csv: empty file '" + path + "'");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const std::vector<std::string> header = split_csv_line(line);
  if (header.size() < 3 || header[0] != "t" || header[1] != "Y")
    throw data_error("panel csv: header must start with t,Y,X_1,...");
  const int p = static_cast<int>(header.size()) - 2;
  for (int j = 0; j < p; ++j) {
    if (header[2 + j] != "X_" + std::to_string(j + 1))
      throw data_error("panel csv: expected column X_" + std::to_string(j + 1) + ", got '" +
                       header[2 + j] + "'");
  }

  std::vector<std::vector<double>> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const std::vector<std::string> fields = split_csv_line(line);
    if (static_cast<int>(fields.size()) != p + 2)
      throw data_error("panel csv: expected " + std::to_string(p + 2) + " fields at line " +
                       std::to_string(line_no) + ", got " + std::to_string(fields.size()));
    std::vector<double> row(p + 2);
    for (std::size_t k = 0; k < fields.size(); ++k) row[k] = parse_field(fields[k], line_no);
    rows.push_back(std::move(row));
  }
  if (rows.size() < 3) throw data_error("panel csv: need at least 3 data rows");

  LogPricePanel panel;
  const int rows_n = static_cast<int>(rows.size());
  panel.t.resize(rows_n);
  panel.y.resize(rows_n);
  panel.x.resize(rows_n, p);
  for (int i = 0; i < rows_n; ++i) {
    panel.t[i] = rows[i][0];
    panel.y[i] = rows[i][1];
    for (int j = 0; j < p; ++j) panel.x(i, j) = rows[i][2 + j];
  }
  validate_panel(panel);
  return panel;
}

void write_panel_csv(const std::string& path, const LogPricePanel& panel) {
  std::ofstream out(path);
  if (!out) throw data_error("panel csv: cannot write '" + path + "'");
  out << "t,Y";
  for (int j = 1; j <= panel.p(); ++j) out << ",X_" << j;
  out << "\n";
  for (int i = 0; i <= panel.n(); ++i) {
    out << fmt17(panel.t[i]) << ',' << fmt17(panel.y[i]);
    for (int j = 0; j < panel.p(); ++j) out << ',' << fmt17(panel.x(i, j));
    out << "\n";
  }
  if (!out) throw data_error("panel csv: write failed for '" + path + "'");
}

std::string fnv1a_hex(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw data_error("digest: cannot open '" + path + "'");
  std::uint64_t hash = 1469598103934665603ull;
  char buf[1 << 14];
  while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
    const std::streamsize got = in.gcount();
    for (std::streamsize i = 0; i < got; ++i) {
      hash ^= static_cast<unsigned char>(buf[i]);
      hash *= 1099511628211ull;
    }
    if (got < static_cast<std::streamsize>(sizeof(buf))) break;
  }
  char out[17];
  std::snprintf(out, sizeof(out), "%016llx", static_cast<unsigned long long>(hash));
  return out;
}

}  // namespace betaflow
