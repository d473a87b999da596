#include "mfnet/report.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include <fmt/format.h>

#include "mfnet/errors.hpp"

namespace mfnet {

namespace {

constexpr const char* kHeader =
    "step,time,batch_size,temperature,train_loss,eval_loss,signed_error_plus,signed_error_minus,"
    "signed_identity_gap,exact_rbf_loss,max_sphere_dev";

double parse_double(const std::string& s) {
  if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  if (s == "inf") return std::numeric_limits<double>::infinity();
  if (s == "-inf") return -std::numeric_limits<double>::infinity();
  std::size_t used = 0;
  const double v = std::stod(s, &used);
  if (used != s.size()) throw ValidationError("report: bad number '" + s + "'");
  return v;
}

}  // namespace

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return fmt::format("{}", v);
}

std::string ExperimentReport::to_csv() const {
  std::string out = fmt::format("# mfnet-report v{}\n", kSchemaVersion);
  for (const auto& [k, v] : meta) out += fmt::format("# {}={}\n", k, v);
  out += kHeader;
  out += '\n';
  for (const auto& r : series) {
    out += fmt::format("{},{},{},{},{},{},{},{},{},{},{}\n", r.step, format_double(r.time), r.batch_size,
                       format_double(r.temperature), format_double(r.train_loss), format_double(r.eval_loss),
                       format_double(r.signed_plus), format_double(r.signed_minus), format_double(r.signed_gap),
                       format_double(r.exact_loss), format_double(r.sphere_dev));
  }
  return out;
}

void ExperimentReport::write_csv(const std::filesystem::path& path) const {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("cannot write report " + path.string());
  os << to_csv();
}

ExperimentReport ExperimentReport::from_csv(const std::string& text) {
  ExperimentReport rep;
  std::istringstream is(text);
  std::string line;
  if (!std::getline(is, line) || line != fmt::format("# mfnet-report v{}", kSchemaVersion))
    throw ValidationError("report: missing or unsupported schema line");
  bool header_seen = false;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    if (line.rfind("# ", 0) == 0) {
      const auto eq = line.find('=');
      if (eq == std::string::npos) throw ValidationError("report: bad meta line '" + line + "'");
      rep.meta[line.substr(2, eq - 2)] = line.substr(eq + 1);
      continue;
    }
    if (!header_seen) {
      if (line != kHeader) throw ValidationError("report: unexpected column header");
      header_seen = true;
      continue;
    }
    std::vector<std::string> f;
    std::stringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) f.push_back(cell);
    if (f.size() != 11) throw ValidationError("report: row has " + std::to_string(f.size()) + " fields");
    ReportRow r;
    r.step = std::stoll(f[0]);
    r.time = parse_double(f[1]);
    r.batch_size = std::stoi(f[2]);
    r.temperature = parse_double(f[3]);
    r.train_loss = parse_double(f[4]);
    r.eval_loss = parse_double(f[5]);
    r.signed_plus = parse_double(f[6]);
    r.signed_minus = parse_double(f[7]);
    r.signed_gap = parse_double(f[8]);
    r.exact_loss = parse_double(f[9]);
    r.sphere_dev = parse_double(f[10]);
    if (!rep.series.empty() && r.step <= rep.series.back().step)
      throw ValidationError("report: steps not strictly increasing");
    rep.series.push_back(r);
  }
  if (!header_seen) throw ValidationError("report: no column header");
  return rep;
}

ExperimentReport ExperimentReport::read_csv(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ValidationError("cannot read report " + path.string());
  std::stringstream ss;
  ss << is.rdbuf();
  return from_csv(ss.str());
}

}  // namespace mfnet
