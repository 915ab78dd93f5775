#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "lqres/dynsys.hpp"

namespace lqres {

std::string format_double(double value) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  return buf;
}

void write_trajectory_csv(const Trajectory& traj, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::Io, "cannot open " + path.string() + " for writing");
  out << "t";
  for (Eigen::Index j = 0; j < traj.dim(); ++j) out << ",x" << (j + 1);
  out << '\n';
  for (Eigen::Index k = 0; k < traj.size(); ++k) {
    out << format_double(traj.times[k]);
    for (Eigen::Index j = 0; j < traj.dim(); ++j) out << ',' << format_double(traj.states(k, j));
    out << '\n';
  }
  if (!out) throw Error(ErrorCode::Io, "write failed for " + path.string());
}

namespace {

std::vector<std::string> split_commas(const std::string& line) {
  std::vector<std::string> fields;
  std::stringstream ss(line);
  std::string field;
  while (std::getline(ss, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

double parse_number(const std::string& text, const std::filesystem::path& path,
                    std::size_t line_no) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != text.size() || !std::isfinite(v))
    throw Error(ErrorCode::MalformedFile,
                path.string() + ":" + std::to_string(line_no) + ": bad number '" + text + "'");
  return v;
}

}  // namespace

Trajectory read_trajectory_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line))
    throw Error(ErrorCode::MalformedFile, path.string() + ": empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const auto header = split_commas(line);
  if (header.size() < 2 || header[0] != "t")
    throw Error(ErrorCode::MalformedFile, path.string() + ":1: header must start with 't'");
  const auto cols = header.size();

  std::vector<double> values;
  std::size_t rows = 0;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = split_commas(line);
    if (fields.size() != cols)
      throw Error(ErrorCode::MalformedFile,
                  path.string() + ":" + std::to_string(line_no) + ": expected " +
                      std::to_string(cols) + " fields");
    for (const auto& f : fields) values.push_back(parse_number(f, path, line_no));
    ++rows;
  }

  Trajectory traj;
  const auto n = static_cast<Eigen::Index>(cols - 1);
  traj.times.resize(static_cast<Eigen::Index>(rows));
  traj.states.resize(static_cast<Eigen::Index>(rows), n);
  for (std::size_t r = 0; r < rows; ++r) {
    const auto ri = static_cast<Eigen::Index>(r);
    traj.times[ri] = values[r * cols];
    for (Eigen::Index j = 0; j < n; ++j) traj.states(ri, j) = values[r * cols + 1 + j];
  }
  for (Eigen::Index k = 1; k < traj.size(); ++k)
    if (!(traj.times[k] > traj.times[k - 1]))
      throw Error(ErrorCode::MalformedFile,
                  path.string() + ": times must be strictly increasing");
  return traj;
}

}  // namespace lqres
