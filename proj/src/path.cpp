#include "pathcalc/path.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

#include "pathcalc/error.hpp"

namespace pathcalc {

namespace {

bool finite(double x) { return std::isfinite(x); }

std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12g", x);
  return buf;
}

}  // namespace

// --- JumpLaw ---------------------------------------------------------------

JumpLaw JumpLaw::two_point(double p, double first, double second) {
  if (!(p >= 0.0 && p <= 1.0) || !finite(first) || !finite(second)) {
    throw InvalidArgument("two-point jump law: need p in [0,1] and finite atoms");
  }
  return JumpLaw(Kind::kTwoPoint, {p, first, second});
}

JumpLaw JumpLaw::uniform(double lo, double hi) {
  if (!finite(lo) || !finite(hi) || lo > hi) {
    throw InvalidArgument("uniform jump law: need finite lo <= hi");
  }
  return JumpLaw(Kind::kUniform, {lo, hi, 0.0});
}

JumpLaw JumpLaw::normal(double mean, double sd) {
  if (!finite(mean) || !finite(sd) || sd < 0.0) {
    throw InvalidArgument("normal jump law: need finite mean and sd >= 0");
  }
  return JumpLaw(Kind::kNormal, {mean, sd, 0.0});
}

double JumpLaw::sample(const CounterRng& rng, std::uint64_t index) const {
  const auto& q = params_;
  switch (kind_) {
    case Kind::kTwoPoint:
      return rng.uniform(Stream::kJumpSize, index) < q[0] ? q[1] : q[2];
    case Kind::kUniform:
      return q[0] + (q[1] - q[0]) * rng.uniform(Stream::kJumpSize, index);
    case Kind::kNormal:
      return q[0] + q[1] * rng.normal(Stream::kJumpSize, index);
  }
  return 0.0;
}

double JumpLaw::mean() const noexcept {
  const auto& q = params_;
  switch (kind_) {
    case Kind::kTwoPoint: return q[0] * q[1] + (1.0 - q[0]) * q[2];
    case Kind::kUniform: return 0.5 * (q[0] + q[1]);
    case Kind::kNormal: return q[0];
  }
  return 0.0;
}

double JumpLaw::second_moment() const noexcept {
  const auto& q = params_;
  switch (kind_) {
    case Kind::kTwoPoint: return q[0] * q[1] * q[1] + (1.0 - q[0]) * q[2] * q[2];
    case Kind::kUniform: return (q[0] * q[0] + q[0] * q[1] + q[1] * q[1]) / 3.0;
    case Kind::kNormal: return q[0] * q[0] + q[1] * q[1];
  }
  return 0.0;
}

bool JumpLaw::nonnegative() const noexcept {
  const auto& q = params_;
  switch (kind_) {
    case Kind::kTwoPoint:
      return (q[0] == 0.0 || q[1] >= 0.0) && (q[0] == 1.0 || q[2] >= 0.0);
    case Kind::kUniform: return q[0] >= 0.0;
    case Kind::kNormal: return q[1] == 0.0 && q[0] >= 0.0;
  }
  return false;
}

std::string JumpLaw::describe() const {
  const auto& q = params_;
  switch (kind_) {
    case Kind::kTwoPoint:
      return "two_point(" + fmt(q[0]) + ", " + fmt(q[1]) + ", " + fmt(q[2]) + ")";
    case Kind::kUniform: return "uniform(" + fmt(q[0]) + ", " + fmt(q[1]) + ")";
    case Kind::kNormal: return "normal(" + fmt(q[0]) + ", " + fmt(q[1]) + ")";
  }
  return "?";
}

// --- PathModel -------------------------------------------------------------

PathModel PathModel::brownian(double sigma, double drift, double start) {
  PathModel m;
  m.kind = Kind::kBrownian;
  m.sigma = sigma;
  m.drift = drift;
  m.start = start;
  m.validate();
  return m;
}

PathModel PathModel::compound_poisson(double rate, JumpLaw law, double start) {
  PathModel m;
  m.kind = Kind::kCompoundPoisson;
  m.sigma = 0.0;
  m.rate = rate;
  m.jump_law = law;
  m.start = start;
  m.validate();
  return m;
}

PathModel PathModel::jump_diffusion(double sigma, double drift, double rate, JumpLaw law,
                                    double start) {
  PathModel m;
  m.kind = Kind::kJumpDiffusion;
  m.sigma = sigma;
  m.drift = drift;
  m.rate = rate;
  m.jump_law = law;
  m.start = start;
  m.validate();
  return m;
}

PathModel PathModel::finite_variation(std::vector<Knot> knots) {
  PathModel m;
  m.kind = Kind::kFiniteVariation;
  m.sigma = 0.0;
  m.knots = std::move(knots);
  m.validate();
  return m;
}

void PathModel::validate() const {
  if (!finite(sigma) || sigma < 0.0) throw InvalidArgument("model: sigma must be finite and >= 0");
  if (!finite(rate) || rate < 0.0) throw InvalidArgument("model: rate must be finite and >= 0");
  if (!finite(drift) || !finite(start)) throw InvalidArgument("model: drift and start must be finite");
  switch (kind) {
    case Kind::kBrownian:
      if (rate != 0.0) throw InvalidArgument("model: Brownian motion has no jumps");
      break;
    case Kind::kCompoundPoisson:
      if (sigma != 0.0 || drift != 0.0) {
        throw InvalidArgument("model: compound Poisson has no diffusion or drift");
      }
      [[fallthrough]];
    case Kind::kJumpDiffusion:
      if (rate > 0.0 && !jump_law) throw InvalidArgument("model: jump law required when rate > 0");
      break;
    case Kind::kFiniteVariation:
      if (rate != 0.0) throw InvalidArgument("model: finite-variation model has no jumps");
      if (knots.empty()) throw InvalidArgument("model: finite-variation model needs knots");
      for (std::size_t i = 0; i < knots.size(); ++i) {
        if (!finite(knots[i].time) || !finite(knots[i].value) || knots[i].time < 0.0) {
          throw InvalidArgument("model: knots must be finite with time >= 0");
        }
        if (i > 0 && !(knots[i].time > knots[i - 1].time)) {
          throw InvalidArgument("model: knot times must be strictly increasing");
        }
      }
      break;
  }
}

const char* to_string(PathModel::Kind kind) noexcept {
  switch (kind) {
    case PathModel::Kind::kBrownian: return "brownian";
    case PathModel::Kind::kCompoundPoisson: return "compound_poisson";
    case PathModel::Kind::kJumpDiffusion: return "jump_diffusion";
    case PathModel::Kind::kFiniteVariation: return "finite_variation";
  }
  return "?";
}

std::string PathModel::describe() const {
  std::ostringstream os;
  os << to_string(kind) << "(";
  switch (kind) {
    case Kind::kBrownian:
      os << "sigma=" << fmt(sigma) << ", drift=" << fmt(drift) << ", start=" << fmt(start);
      break;
    case Kind::kCompoundPoisson:
      os << "rate=" << fmt(rate) << ", law=" << (jump_law ? jump_law->describe() : "none")
         << ", start=" << fmt(start);
      break;
    case Kind::kJumpDiffusion:
      os << "sigma=" << fmt(sigma) << ", drift=" << fmt(drift) << ", rate=" << fmt(rate)
         << ", law=" << (jump_law ? jump_law->describe() : "none") << ", start=" << fmt(start);
      break;
    case Kind::kFiniteVariation:
      os << knots.size() << " knots";
      break;
  }
  os << ")";
  return os.str();
}

// --- SamplePath ------------------------------------------------------------

SamplePath SamplePath::from_columns(std::vector<double> times, std::vector<double> values,
                                    std::vector<double> pre_values,
                                    std::vector<double> jump_sizes, std::uint64_t seed,
                                    std::optional<PathModel> model) {
  const std::size_t n = times.size();
  if (n < 2) throw InvalidArgument("path: need at least two grid points");
  if (values.size() != n || pre_values.size() != n || jump_sizes.size() != n) {
    throw InvalidArgument("path: column lengths differ");
  }
  if (times[0] != 0.0) throw InvalidArgument("path: first time must be 0");
  SamplePath p;
  for (std::size_t i = 0; i < n; ++i) {
    if (!finite(times[i]) || !finite(values[i]) || !finite(pre_values[i]) ||
        !finite(jump_sizes[i])) {
      throw InvalidArgument("path: non-finite entry at index " + std::to_string(i));
    }
    if (i > 0 && !(times[i] > times[i - 1])) {
      throw InvalidArgument("path: times must be strictly increasing (index " +
                            std::to_string(i) + ")");
    }
    if (jump_sizes[i] != 0.0) {
      if (i == 0) throw InvalidArgument("path: jump at time 0");
      if (values[i] != pre_values[i] + jump_sizes[i]) {
        throw InvalidArgument("path: value != pre_value + jump at index " + std::to_string(i));
      }
      p.jumps_.push_back({i, jump_sizes[i]});
    } else if (values[i] != pre_values[i]) {
      throw InvalidArgument("path: pre_value differs from value off jumps (index " +
                            std::to_string(i) + ")");
    }
  }
  p.times_ = std::move(times);
  p.values_ = std::move(values);
  p.pre_values_ = std::move(pre_values);
  p.jump_sizes_ = std::move(jump_sizes);
  p.seed_ = seed;
  p.model_ = std::move(model);
  return p;
}

std::size_t SamplePath::index_at_or_before(double t) const noexcept {
  const auto it = std::upper_bound(times_.begin(), times_.end(), t);
  if (it == times_.begin()) return 0;
  return static_cast<std::size_t>(it - times_.begin()) - 1;
}

std::span<const Jump> SamplePath::jumps_between(std::size_t from, std::size_t to) const noexcept {
  const auto lo = std::upper_bound(jumps_.begin(), jumps_.end(), from,
                                   [](std::size_t v, const Jump& j) { return v < j.index; });
  const auto hi = std::upper_bound(lo, jumps_.end(), to,
                                   [](std::size_t v, const Jump& j) { return v < j.index; });
  return {lo, hi};
}

double SamplePath::continuous_rms_increment() const noexcept {
  double ss = 0.0;
  for (std::size_t i = 1; i < size(); ++i) {
    const double d = pre_values_[i] - values_[i - 1];
    ss += d * d;
  }
  return std::sqrt(ss / static_cast<double>(size() - 1));
}

// --- simulate --------------------------------------------------------------

namespace {

double interpolate_knots(const std::vector<Knot>& knots, double t) {
  if (t <= knots.front().time) return knots.front().value;
  if (t >= knots.back().time) return knots.back().value;
  const auto it = std::upper_bound(knots.begin(), knots.end(), t,
                                   [](double v, const Knot& k) { return v < k.time; });
  const Knot& r = *it;
  const Knot& l = *(it - 1);
  return l.value + (r.value - l.value) * ((t - l.time) / (r.time - l.time));
}

struct Arrival {
  double time;
  double size;
};

constexpr std::uint64_t kMaxArrivals = 50'000'000;

}  // namespace

SamplePath simulate(const PathModel& model, std::size_t n_steps, double horizon,
                    std::uint64_t seed) {
  model.validate();
  if (n_steps < 1) throw InvalidArgument("simulate: n_steps must be >= 1");
  if (!finite(horizon) || !(horizon > 0.0)) throw InvalidArgument("simulate: T must be > 0");

  const CounterRng rng(seed);
  const double n = static_cast<double>(n_steps);
  auto base_time = [&](std::size_t i) {
    return i == n_steps ? horizon : horizon * (static_cast<double>(i) / n);
  };

  std::vector<Arrival> arrivals;
  if (model.has_jumps()) {
    double tau = 0.0;
    for (std::uint64_t k = 0;; ++k) {
      if (k >= kMaxArrivals) throw InvalidArgument("simulate: jump rate too large for horizon");
      tau += rng.exponential(Stream::kJumpArrival, k) / model.rate;
      if (!(tau < horizon)) break;
      const double size = model.jump_law->sample(rng, k);
      if (size != 0.0 && tau > 0.0) arrivals.push_back({tau, size});
    }
  }

  const double sigma = model.diffusion_sigma();
  const bool fv = model.kind == PathModel::Kind::kFiniteVariation;
  auto continuous = [&](double t, double w) {
    return fv ? interpolate_knots(model.knots, t) : model.start + model.drift * t + sigma * w;
  };

  const std::size_t total = n_steps + 1 + arrivals.size();
  std::vector<double> times, values, pre, jumps;
  times.reserve(total);
  values.reserve(total);
  pre.reserve(total);
  jumps.reserve(total);

  const double x0 = continuous(0.0, 0.0);
  times.push_back(0.0);
  values.push_back(x0);
  pre.push_back(x0);
  jumps.push_back(0.0);

  double w = 0.0;
  double jump_sum = 0.0;
  std::size_t next = 0;  // next arrival
  for (std::size_t i = 0; i < n_steps; ++i) {
    const double lo = base_time(i);
    const double hi = base_time(i + 1);
    double prev = lo;
    std::uint32_t piece = 0;
    auto step_to = [&](double t, double jump) {
      if (sigma > 0.0) {
        w += std::sqrt(t - prev) * rng.normal(Stream::kDiffusion, i, piece);
      }
      ++piece;
      prev = t;
      const double before = continuous(t, w) + jump_sum;
      times.push_back(t);
      pre.push_back(before);
      values.push_back(jump != 0.0 ? before + jump : before);
      jumps.push_back(jump);
      jump_sum += jump;
    };
    while (next < arrivals.size() && arrivals[next].time < hi) {
      double t = arrivals[next].time;
      double size = arrivals[next].size;
      ++next;
      // coincident arrivals merge
      while (next < arrivals.size() && arrivals[next].time == t) size += arrivals[next++].size;
      step_to(t, size);
    }
    double end_jump = 0.0;
    while (next < arrivals.size() && arrivals[next].time == hi) end_jump += arrivals[next++].size;
    step_to(hi, end_jump);
  }
  return SamplePath::from_columns(std::move(times), std::move(values), std::move(pre),
                                  std::move(jumps), seed, model);
}

// --- jump splitting --------------------------------------------------------

namespace {

// r with (c + s) + r == target in floating point.
double rounding_residue(double target, double c, double s) {
  const double y = c + s;
  double r = target - y;
  for (int attempt = 0; attempt < 8; ++attempt) {
    const double back = y + r;
    if (back == target) return r;
    r = std::nextafter(r, back < target ? std::numeric_limits<double>::infinity()
                                        : -std::numeric_limits<double>::infinity());
  }
  throw NumericRange("split_jumps: value " + fmt(target) + " not recoverable after split");
}

}  // namespace

JumpSplit split_jumps(const SamplePath& path, double threshold) {
  if (!finite(threshold) || !(threshold > 0.0)) {
    throw InvalidArgument("split_jumps: threshold must be finite and > 0");
  }
  const std::size_t n = path.size();
  std::vector<double> times(path.times().begin(), path.times().end());
  std::vector<double> values(n), pre(n), jumps(n, 0.0), value_res(n), pre_res(n);
  std::vector<RemovedJump> removed;
  double removed_sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double before = removed_sum;
    const double size = path.jump_sizes()[i];
    const bool big = size != 0.0 && std::abs(size) > threshold;
    pre[i] = path.pre_value(i) - before;
    if (big) {
      removed.push_back({i, path.time(i), size});
      removed_sum = before + size;
      values[i] = pre[i];
    } else if (size != 0.0) {
      jumps[i] = size;
      values[i] = pre[i] + size;
    } else {
      values[i] = pre[i];
    }
    pre_res[i] = rounding_residue(path.pre_value(i), pre[i], before);
    value_res[i] = rounding_residue(path.value(i), values[i], removed_sum);
  }
  return {SamplePath::from_columns(std::move(times), std::move(values), std::move(pre),
                                   std::move(jumps), path.seed(), path.model()),
          std::move(removed), std::move(value_res), std::move(pre_res)};
}

SamplePath add_jumps(const JumpSplit& split) {
  const SamplePath& c = split.continuous_part;
  const std::size_t n = c.size();
  if (split.value_residue.size() != n || split.pre_residue.size() != n) {
    throw InvalidArgument("add_jumps: residue length mismatch");
  }
  std::vector<double> times(c.times().begin(), c.times().end());
  std::vector<double> values(n), pre(n), jumps(c.jump_sizes().begin(), c.jump_sizes().end());
  double removed_sum = 0.0;
  std::size_t k = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double before = removed_sum;
    if (k < split.big_jumps.size() && split.big_jumps[k].index == i) {
      if (jumps[i] != 0.0) throw InvalidArgument("add_jumps: removed jump collides with kept jump");
      jumps[i] = split.big_jumps[k].size;
      removed_sum = before + split.big_jumps[k].size;
      ++k;
    }
    pre[i] = (c.pre_value(i) + before) + split.pre_residue[i];
    values[i] = (c.value(i) + removed_sum) + split.value_residue[i];
  }
  if (k != split.big_jumps.size()) throw InvalidArgument("add_jumps: jump index out of range");
  return SamplePath::from_columns(std::move(times), std::move(values), std::move(pre),
                                  std::move(jumps), c.seed(), c.model());
}

// --- CSV -------------------------------------------------------------------

namespace {
constexpr const char* kCsvHeader = "time,value,pre_jump_value,jump_size";
}

void write_path_csv(const SamplePath& path, std::ostream& out) {
  out << kCsvHeader << '\n';
  char buf[128];
  for (std::size_t i = 0; i < path.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g\n", path.time(i), path.value(i),
                  path.pre_value(i), path.jump_sizes()[i]);
    out << buf;
  }
}

SamplePath read_path_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw FormatError("path csv: empty input");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kCsvHeader) throw FormatError("path csv: unexpected header '" + line + "'");
  std::vector<double> cols[4];
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const char* p = line.c_str();
    for (int c = 0; c < 4; ++c) {
      char* end = nullptr;
      const double v = std::strtod(p, &end);
      if (end == p) throw FormatError("path csv: bad number on line " + std::to_string(row));
      cols[c].push_back(v);
      p = end;
      if (c < 3) {
        if (*p != ',') throw FormatError("path csv: expected 4 columns on line " + std::to_string(row));
        ++p;
      }
    }
    if (*p != '\0') throw FormatError("path csv: trailing data on line " + std::to_string(row));
  }
  try {
    return SamplePath::from_columns(std::move(cols[0]), std::move(cols[1]), std::move(cols[2]),
                                    std::move(cols[3]));
  } catch (const InvalidArgument& e) {
    throw FormatError(std::string("path csv: ") + e.what());
  }
}

}  // namespace pathcalc
