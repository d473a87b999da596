#include "mfnet/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <regex>
#include <sstream>

#include <fmt/format.h>

#include "mfnet/errors.hpp"
#include "mfnet/report.hpp"

namespace mfnet {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep)) out.push_back(trim(item));
  return out;
}

double to_double(const std::string& key, const std::string& v) {
  const std::string t = trim(v);
  if (t == "inf") return std::numeric_limits<double>::infinity();
  try {
    std::size_t used = 0;
    const double x = std::stod(t, &used);
    if (used == t.size()) return x;
  } catch (const std::exception&) {
  }
  throw ValidationError("config: '" + key + "' expects a number, got '" + v + "'");
}

std::int64_t to_int(const std::string& key, const std::string& v) {
  const std::string t = trim(v);
  try {
    std::size_t used = 0;
    const long long x = std::stoll(t, &used);
    if (used == t.size()) return x;
    // accept integral values written in exponent form, e.g. 2e5
    const double y = std::stod(t, &used);
    if (used == t.size() && y == std::floor(y) && std::abs(y) < 9e15) return static_cast<std::int64_t>(y);
  } catch (const std::exception&) {
  }
  throw ValidationError("config: '" + key + "' expects an integer, got '" + v + "'");
}

std::uint64_t to_uint(const std::string& key, const std::string& v) {
  const std::string t = trim(v);
  try {
    std::size_t used = 0;
    const unsigned long long x = std::stoull(t, &used);
    if (used == t.size() && t.find('-') == std::string::npos) return x;
  } catch (const std::exception&) {
  }
  throw ValidationError("config: '" + key + "' expects a non-negative integer, got '" + v + "'");
}

std::vector<ScheduleTerm> parse_schedule(const std::string& key, const std::string& v) {
  std::vector<ScheduleTerm> out;
  if (trim(v).empty() || trim(v) == "none") return out;
  for (const auto& entry : split(v, ',')) {
    const auto colon = entry.find(':');
    if (colon == std::string::npos) throw ValidationError("config: '" + key + "' entry '" + entry + "' needs AT:VALUE");
    ScheduleTerm term;
    std::string at = trim(entry.substr(0, colon));
    if (!at.empty() && at.back() == '%') {
      term.percent = true;
      at.pop_back();
    }
    term.at = to_int(key, at);
    if (term.at < 0 || (term.percent && term.at > 100))
      throw ValidationError("config: '" + key + "' has an out-of-range step '" + entry + "'");
    term.value = trim(entry.substr(colon + 1));
    out.push_back(term);
  }
  return out;
}

std::string schedule_text(const std::vector<ScheduleTerm>& s) {
  if (s.empty()) return "none";
  std::string out;
  for (std::size_t k = 0; k < s.size(); ++k) {
    if (k) out += ',';
    out += fmt::format("{}{}:{}", s[k].at, s[k].percent ? "%" : "", s[k].value);
  }
  return out;
}

int resolve_batch_size(const std::string& expr, int n) {
  static const std::regex kInt(R"(\d+)");
  static const std::regex kDiv(R"(n/(\d+))");
  static const std::regex kDivSq(R"(\(n/(\d+)\)\^2)");
  static const std::regex kFloorSq(R"(floor\(n/(\d+)\)\^2)");
  std::smatch m;
  if (std::regex_match(expr, m, kInt)) return std::stoi(expr);
  if (std::regex_match(expr, m, kDiv)) return n / std::stoi(m[1]);
  if (std::regex_match(expr, m, kDivSq)) {
    const double q = static_cast<double>(n) / std::stoi(m[1]);
    return static_cast<int>(std::floor(q * q));
  }
  if (std::regex_match(expr, m, kFloorSq)) {
    const int q = n / std::stoi(m[1]);
    return q * q;
  }
  throw ValidationError("config: batch size '" + expr + "' is not INT, n/K, (n/K)^2 or floor(n/K)^2");
}

// "40", "40*d", "-40*d^2"
double resolve_scaled(const std::string& expr, int d) {
  std::string t = trim(expr);
  double mult = 1.0;
  if (t.size() > 4 && t.compare(t.size() - 4, 4, "*d^2") == 0) {
    mult = static_cast<double>(d) * d;
    t.resize(t.size() - 4);
  } else if (t.size() > 2 && t.compare(t.size() - 2, 2, "*d") == 0) {
    mult = d;
    t.resize(t.size() - 2);
  }
  return to_double("c_init", t) * mult;
}

std::int64_t resolve_at(const ScheduleTerm& t, std::int64_t steps) {
  return t.percent ? steps * t.at / 100 : t.at;
}

const std::map<std::string, ExperimentKind>& kind_names() {
  static const std::map<std::string, ExperimentKind> names{
      {"rbf-scaling", ExperimentKind::RbfScaling}, {"sigmoid-scaling", ExperimentKind::SigmoidScaling},
      {"quench", ExperimentKind::Quench},          {"slice", ExperimentKind::Slice},
      {"clt-check", ExperimentKind::CltCheck},     {"gradcheck", ExperimentKind::GradCheck}};
  return names;
}

std::string dynamics_name(Dynamics d) {
  switch (d) {
    case Dynamics::Gd:
      return "gd";
    case Dynamics::OnlineSgd:
      return "sgd";
    case Dynamics::Langevin:
      return "langevin";
  }
  return "gd";
}

}  // namespace

std::string to_string(ExperimentKind k) {
  for (const auto& [name, kind] : kind_names())
    if (kind == k) return name;
  return "unknown";
}

ExperimentKind parse_experiment_kind(const std::string& s) {
  const auto it = kind_names().find(trim(s));
  if (it == kind_names().end()) throw ValidationError("unknown experiment '" + s + "'");
  return it->second;
}

std::map<std::string, std::string> parse_key_values(const std::string& text) {
  std::map<std::string, std::string> kv;
  std::istringstream is(text);
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ValidationError(fmt::format("config line {}: expected key = value", lineno));
    kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  return kv;
}

void ExperimentSpec::apply(const std::map<std::string, std::string>& kv) {
  for (const auto& [key, v] : kv) {
    if (key == "experiment") experiment = parse_experiment_kind(v);
    else if (key == "unit") unit = v;
    else if (key == "d") d = static_cast<int>(to_int(key, v));
    else if (key == "alpha") alpha = to_double(key, v);
    else if (key == "n_list") {
      n_list.clear();
      for (const auto& s : split(v, ',')) n_list.push_back(static_cast<int>(to_int(key, s)));
    } else if (key == "realizations") realizations = static_cast<int>(to_int(key, v));
    else if (key == "seeds") seeds = static_cast<int>(to_int(key, v));
    else if (key == "master_seed") master_seed = to_uint(key, v);
    else if (key == "dt") dt = to_double(key, v);
    else if (key == "steps") steps = to_int(key, v);
    else if (key == "dynamics") {
      if (v == "gd") dynamics = Dynamics::Gd;
      else if (v == "sgd") dynamics = Dynamics::OnlineSgd;
      else if (v == "langevin") dynamics = Dynamics::Langevin;
      else throw ValidationError("config: dynamics must be gd, sgd or langevin");
    } else if (key == "batch_schedule") batch_schedule = parse_schedule(key, v);
    else if (key == "noise_schedule") noise_schedule = parse_schedule(key, v);
    else if (key == "beta") beta = to_double(key, v);
    else if (key == "c_init") c_init = v;
    else if (key == "z_init") z_init = v;
    else if (key == "prior_c_std") prior_c_std = to_double(key, v);
    else if (key == "prior_z_std") prior_z_std = to_double(key, v);
    else if (key == "eval_batch") eval_batch = static_cast<int>(to_int(key, v));
    else if (key == "probes") probes = static_cast<int>(to_int(key, v));
    else if (key == "trace") trace = to_int(key, v) != 0;
    else if (key == "quench_window") quench_window = to_double(key, v);
    else if (key == "slice") slice = v;
    else if (key == "slice_resolution") slice_resolution = static_cast<int>(to_int(key, v));
    else if (key == "clt_n") clt_n = static_cast<int>(to_int(key, v));
    else if (key == "clt_seeds") clt_seeds = static_cast<int>(to_int(key, v));
    else if (key == "clt_mc_draws") clt_mc_draws = to_int(key, v);
    else if (key == "gradcheck_cases") gradcheck_cases = static_cast<int>(to_int(key, v));
    else if (key == "out") out = v;
    else throw ValidationError("config: unknown key '" + key + "'");
  }
}

ExperimentSpec ExperimentSpec::parse(const std::string& text) {
  ExperimentSpec spec;
  spec.apply(parse_key_values(text));
  return spec;
}

ExperimentSpec ExperimentSpec::load(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw ValidationError("cannot read config " + path.string());
  std::stringstream ss;
  ss << is.rdbuf();
  return parse(ss.str());
}

std::string ExperimentSpec::to_text() const {
  std::string n_text;
  for (std::size_t k = 0; k < n_list.size(); ++k) n_text += (k ? "," : "") + std::to_string(n_list[k]);
  std::string t;
  auto line = [&](const char* key, const std::string& v) { t += fmt::format("{} = {}\n", key, v); };
  line("experiment", to_string(experiment));
  line("unit", unit);
  line("d", std::to_string(d));
  line("alpha", format_double(alpha));
  line("n_list", n_text);
  line("realizations", std::to_string(realizations));
  line("seeds", std::to_string(seeds));
  line("master_seed", std::to_string(master_seed));
  line("dt", format_double(dt));
  line("steps", std::to_string(steps));
  line("dynamics", dynamics_name(dynamics));
  line("batch_schedule", schedule_text(batch_schedule));
  line("noise_schedule", schedule_text(noise_schedule));
  line("beta", format_double(beta));
  line("c_init", c_init);
  line("z_init", z_init);
  line("prior_c_std", format_double(prior_c_std));
  line("prior_z_std", format_double(prior_z_std));
  line("eval_batch", std::to_string(eval_batch));
  line("probes", std::to_string(probes));
  line("trace", trace ? "1" : "0");
  line("quench_window", format_double(quench_window));
  line("slice", slice);
  line("slice_resolution", std::to_string(slice_resolution));
  line("clt_n", std::to_string(clt_n));
  line("clt_seeds", std::to_string(clt_seeds));
  line("clt_mc_draws", std::to_string(clt_mc_draws));
  line("gradcheck_cases", std::to_string(gradcheck_cases));
  line("out", out);
  return t;
}

std::string ExperimentSpec::config_hash() const {
  ExperimentSpec copy = *this;
  copy.out.clear();
  const std::string text = copy.to_text();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return fmt::format("{:016x}", h);
}

Unit ExperimentSpec::make_unit() const {
  if (unit == "rbf") return Unit::rbf(alpha, d);
  if (unit == "sigmoid") return Unit::sigmoid(d);
  throw ValidationError("config: unit must be rbf or sigmoid, got '" + unit + "'");
}

InitSpec ExperimentSpec::init_spec() const {
  InitSpec init;
  const auto parts = split(c_init, ':');
  if (parts.empty()) throw ValidationError("config: empty c_init");
  if (parts[0] == "zero" && parts.size() == 1) {
    init.c.kind = CLaw::Kind::Zero;
  } else if (parts[0] == "uniform" && parts.size() == 3) {
    init.c.kind = CLaw::Kind::Uniform;
    init.c.lo = resolve_scaled(parts[1], d);
    init.c.hi = resolve_scaled(parts[2], d);
    if (!(init.c.lo <= init.c.hi)) throw ValidationError("config: c_init uniform needs LO <= HI");
  } else if (parts[0] == "normal" && parts.size() == 2) {
    init.c.kind = CLaw::Kind::Normal;
    init.c.stddev = resolve_scaled(parts[1], d);
    if (!(init.c.stddev >= 0.0)) throw ValidationError("config: c_init normal needs STD >= 0");
  } else {
    throw ValidationError("config: c_init must be zero, uniform:LO:HI or normal:STD, got '" + c_init + "'");
  }
  if (z_init == "uniform") init.z = InitSpec::ZLaw::Uniform;
  else if (z_init == "planted")
    throw ValidationError("config: z_init = planted needs a planted target, which experiments do not define");
  else throw ValidationError("config: z_init must be uniform");
  return init;
}

SliceSpec ExperimentSpec::slice_spec() const {
  if (slice == "two-angle") return SliceSpec::two_angle();
  const auto parts = split(slice, ':');
  if (parts.size() == 3 && parts[0] == "great-circle")
    return SliceSpec::great_circle(static_cast<int>(to_int("slice", parts[1])),
                                   static_cast<int>(to_int("slice", parts[2])));
  throw ValidationError("config: slice must be two-angle or great-circle:I:J");
}

TrainConfig ExperimentSpec::train_config(int n, std::uint64_t run_seed) const {
  TrainConfig cfg;
  cfg.dt = dt;
  cfg.steps = steps;
  cfg.dynamics = dynamics;
  cfg.beta = beta;
  cfg.init = init_spec();
  cfg.master_seed = run_seed;
  cfg.prior = {prior_c_std, prior_z_std};
  for (const auto& t : batch_schedule) cfg.batch_schedule.push_back({resolve_at(t, steps), resolve_batch_size(t.value, n)});
  for (const auto& t : noise_schedule) cfg.noise_schedule.push_back({resolve_at(t, steps), to_double("noise_schedule", t.value)});
  return cfg;
}

std::optional<std::int64_t> ExperimentSpec::quench_step(int n) const {
  const TrainConfig cfg = train_config(n, 0);
  std::optional<std::int64_t> q;
  for (std::size_t k = 1; k < cfg.batch_schedule.size(); ++k)
    if (cfg.batch_schedule[k].size > cfg.batch_schedule[k - 1].size) q = cfg.batch_schedule[k].step;
  return q;
}

void ExperimentSpec::validate() const {
  if (d < 1) throw ValidationError("config: d must be >= 1");
  const Unit u = make_unit();
  if (n_list.empty()) throw ValidationError("config: n_list must not be empty");
  for (std::size_t k = 0; k < n_list.size(); ++k) {
    if (n_list[k] < 1) throw ValidationError("config: every n must be >= 1");
    if (k > 0 && n_list[k] <= n_list[k - 1]) throw ValidationError("config: n_list must be strictly increasing");
  }
  if (realizations < 1) throw ValidationError("config: realizations must be >= 1");
  if (seeds < 1) throw ValidationError("config: seeds must be >= 1");
  if (eval_batch < 1) throw ValidationError("config: eval_batch must be >= 1");
  if (probes < 0) throw ValidationError("config: probes must be >= 0");
  if (!(quench_window > 0.0 && quench_window <= 0.5)) throw ValidationError("config: quench_window must be in (0, 0.5]");
  init_spec();

  switch (experiment) {
    case ExperimentKind::RbfScaling:
      if (!u.is_rbf()) throw ValidationError("rbf-scaling needs unit = rbf");
      break;
    case ExperimentKind::SigmoidScaling:
    case ExperimentKind::Quench:
      if (u.is_rbf()) throw ValidationError(to_string(experiment) + " needs unit = sigmoid");
      break;
    case ExperimentKind::Slice: {
      const SliceSpec s = slice_spec();
      if (s.kind == SliceSpec::Kind::GreatCircle && (s.i == s.j || s.i < 0 || s.j < 0 || s.i >= d || s.j >= d))
        throw ValidationError("config: great-circle indices must differ and be < d");
      if (s.kind == SliceSpec::Kind::TwoAngle && d < 3) throw ValidationError("config: two-angle slice needs d >= 3");
      if (slice_resolution < 1) throw ValidationError("config: slice_resolution must be >= 1");
      break;
    }
    case ExperimentKind::CltCheck:
      if (clt_n < 1 || clt_seeds < 2 || clt_mc_draws < 2)
        throw ValidationError("config: clt-check needs clt_n >= 1, clt_seeds >= 2, clt_mc_draws >= 2");
      return;
    case ExperimentKind::GradCheck:
      if (gradcheck_cases < 1) throw ValidationError("config: gradcheck_cases must be >= 1");
      return;
  }
  for (int n : n_list) train_config(n, 0).validate(u);
  if (experiment == ExperimentKind::Quench && !quench_step(n_list.front()))
    throw ValidationError("quench needs a batch schedule that increases P");
}

void ExperimentSpec::rescale(double factor) {
  if (!(factor > 0.0)) throw ValidationError("--scale must be positive");
  steps = std::max<std::int64_t>(1, std::llround(static_cast<double>(steps) * factor));
  for (auto* sched : {&batch_schedule, &noise_schedule})
    for (auto& t : *sched)
      if (!t.percent) t.at = std::llround(static_cast<double>(t.at) * factor);
}

std::uint64_t cell_seed(std::uint64_t master_seed, int n, int realization, int seed_index) {
  std::uint64_t h = mix64(master_seed ^ 0x6a09e667f3bcc909ULL);
  h = mix64(h ^ static_cast<std::uint64_t>(n));
  h = mix64(h ^ (static_cast<std::uint64_t>(realization) << 20));
  h = mix64(h ^ (static_cast<std::uint64_t>(seed_index) << 40));
  return h;
}

}  // namespace mfnet
