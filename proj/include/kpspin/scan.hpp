#pragma once

// Parameter scans over (k, alpha) grids with per-cell seeding, failure
// tracking and resumable checkpoint files.

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "kpspin/chaos_metrics.hpp"
#include "kpspin/floquet.hpp"
#include "kpspin/model.hpp"
#include "kpspin/parallel.hpp"
#include "kpspin/quantum_metrics.hpp"
#include "kpspin/seeding.hpp"

namespace kpspin {

enum class Metric { Lyapunov, Area, Similarity, Gamma, Delta, LambdaQ };

inline const char* to_string(Metric m) {
  switch (m) {
    case Metric::Lyapunov: return "lyapunov";
    case Metric::Area: return "area";
    case Metric::Similarity: return "similarity";
    case Metric::Gamma: return "gamma";
    case Metric::Delta: return "delta";
    case Metric::LambdaQ: return "lambda_q";
  }
  return "?";
}

inline Metric parse_metric(const std::string& s) {
  for (Metric m : {Metric::Lyapunov, Metric::Area, Metric::Similarity, Metric::Gamma, Metric::Delta, Metric::LambdaQ})
    if (s == to_string(m)) return m;
  throw std::invalid_argument("unknown metric '" + s + "'");
}

inline bool is_quantum(Metric m) { return m == Metric::Gamma || m == Metric::Delta || m == Metric::LambdaQ; }

// Inclusive linear axis; a single point sits at min.
struct Axis {
  double min = 0.0;
  double max = 0.0;
  std::size_t count = 1;

  double at(std::size_t i) const {
    if (count == 1) return min;
    return min + (max - min) * static_cast<double>(i) / static_cast<double>(count - 1);
  }
};

struct ScanSettings {
  std::size_t n_steps = 10000;  // lyapunov
  std::size_t n_seeds = 1;      // lyapunov: max over this many random seeds
  std::size_t n_tot = 2000;     // area, similarity
  double d_min = 6e-2;          // area
  std::vector<int> t_max_list = default_t_max_list();
  double d_alpha = 5e-4;        // similarity
  double d_k = 0.0;
  std::size_t n_kicks = 200;
  int n_s = 128;                // quantum metrics
  int n_max = 60;               // lambda_q
};

struct ScanSpec {
  Metric metric = Metric::Lyapunov;
  int p = 2;
  Axis k_range;
  Axis alpha_range;
  ScanSettings settings;
  std::uint64_t root_seed = default_root_seed;

  std::size_t cells() const { return k_range.count * alpha_range.count; }

  void validate() const {
    if (p < 2) throw std::invalid_argument("scan: p must be >= 2");
    for (const Axis* a : {&k_range, &alpha_range}) {
      if (a->count < 1) throw std::invalid_argument("scan: axis counts must be >= 1");
      if (!(a->min <= a->max) || !std::isfinite(a->min) || !std::isfinite(a->max))
        throw std::invalid_argument("scan: axis ranges must be finite and ordered");
    }
    if (k_range.min < 0.0) throw std::invalid_argument("scan: k must be >= 0");
    const auto& s = settings;
    if (metric == Metric::Lyapunov && (s.n_steps < 10000 || s.n_seeds < 1))
      throw std::invalid_argument("scan: lyapunov needs n_steps >= 1e4 and n_seeds >= 1");
    if (metric == Metric::Area && (s.n_tot < 1000 || !(s.d_min > 0.0) || s.t_max_list.empty()))
      throw std::invalid_argument("scan: area needs n_tot >= 1000, d_min > 0 and a t_max list");
    if (metric == Metric::Similarity && (s.n_tot < 100 || s.n_kicks < 10))
      throw std::invalid_argument("scan: similarity needs n_tot >= 100 and n_kicks >= 10");
    if (is_quantum(metric) && s.n_s < 1) throw std::invalid_argument("scan: n_s must be >= 1");
    if (metric == Metric::LambdaQ && s.n_max < 1) throw std::invalid_argument("scan: n_max must be >= 1");
  }
};

inline void to_json(nlohmann::json& j, const Axis& a) { j = {{"min", a.min}, {"max", a.max}, {"count", a.count}}; }
inline void from_json(const nlohmann::json& j, Axis& a) {
  j.at("min").get_to(a.min);
  j.at("max").get_to(a.max);
  j.at("count").get_to(a.count);
}

inline void to_json(nlohmann::json& j, const ScanSettings& s) {
  j = {{"n_steps", s.n_steps}, {"n_seeds", s.n_seeds}, {"n_tot", s.n_tot},     {"d_min", s.d_min},
       {"t_max", s.t_max_list}, {"d_alpha", s.d_alpha}, {"d_k", s.d_k},         {"n_kicks", s.n_kicks},
       {"n_s", s.n_s},         {"n_max", s.n_max}};
}
inline void from_json(const nlohmann::json& j, ScanSettings& s) {
  j.at("n_steps").get_to(s.n_steps);
  j.at("n_seeds").get_to(s.n_seeds);
  j.at("n_tot").get_to(s.n_tot);
  j.at("d_min").get_to(s.d_min);
  j.at("t_max").get_to(s.t_max_list);
  j.at("d_alpha").get_to(s.d_alpha);
  j.at("d_k").get_to(s.d_k);
  j.at("n_kicks").get_to(s.n_kicks);
  j.at("n_s").get_to(s.n_s);
  j.at("n_max").get_to(s.n_max);
}

inline void to_json(nlohmann::json& j, const ScanSpec& s) {
  j = {{"metric", to_string(s.metric)}, {"p", s.p},
       {"k_range", s.k_range},          {"alpha_range", s.alpha_range},
       {"settings", s.settings},        {"root_seed", s.root_seed}};
}
inline void from_json(const nlohmann::json& j, ScanSpec& s) {
  s.metric = parse_metric(j.at("metric").get<std::string>());
  j.at("p").get_to(s.p);
  j.at("k_range").get_to(s.k_range);
  j.at("alpha_range").get_to(s.alpha_range);
  j.at("settings").get_to(s.settings);
  j.at("root_seed").get_to(s.root_seed);
}

inline std::uint64_t fnv1a(const void* data, std::size_t n, std::uint64_t h = 0xcbf29ce484222325ULL) {
  const auto* b = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= b[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string canonical_json(const ScanSpec& s) { return nlohmann::json(s).dump(); }

inline std::uint64_t spec_digest(const ScanSpec& s) {
  const std::string j = canonical_json(s);
  return fnv1a(j.data(), j.size());
}

enum class CellStatus : std::uint8_t { Pending = 0, Done = 1, Failed = 2 };

struct CellFailure {
  std::size_t row = 0;  // alpha index
  std::size_t col = 0;  // k index
  std::string message;
};

// Row-major grid, alpha rows by k columns.
struct ScanTable {
  ScanSpec spec;
  std::vector<double> values;
  std::vector<CellStatus> status;
  std::vector<CellFailure> failures;  // from this process only

  explicit ScanTable(ScanSpec s)
      : spec(std::move(s)),
        values(spec.cells(), std::numeric_limits<double>::quiet_NaN()),
        status(spec.cells(), CellStatus::Pending) {}

  std::size_t rows() const { return spec.alpha_range.count; }
  std::size_t cols() const { return spec.k_range.count; }
  std::size_t index(std::size_t row, std::size_t col) const { return row * cols() + col; }
  double value(std::size_t row, std::size_t col) const { return values[index(row, col)]; }
  double alpha(std::size_t row) const { return spec.alpha_range.at(row); }
  double k(std::size_t col) const { return spec.k_range.at(col); }

  std::size_t count(CellStatus s) const { return static_cast<std::size_t>(std::count(status.begin(), status.end(), s)); }
  bool complete() const { return count(CellStatus::Pending) == 0; }
};

// Shared read-only state for evaluating cells of one spec.
class CellEvaluator {
 public:
  explicit CellEvaluator(const ScanSpec& spec) : spec_(spec) {
    if (is_quantum(spec.metric)) {
      rep_.emplace(spec.settings.n_s);
      jy_ = std::make_unique<JyEigenbasis>(jy_eigenbasis(*rep_));
      if (spec.metric == Metric::LambdaQ) jz_ = spin_operators(*rep_).jz;
    }
  }

  double operator()(std::size_t row, std::size_t col) const {
    const auto& s = spec_.settings;
    const ModelParams prm(spec_.p, spec_.k_range.at(col), spec_.alpha_range.at(row));
    const std::uint64_t seed = derive_seed(spec_.root_seed, row, col);
    switch (spec_.metric) {
      case Metric::Lyapunov: {
        double best = -std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < s.n_seeds; ++i) {
          const auto start = seed_point(s.n_seeds == 1 ? seed : derive_seed(seed, i));
          best = std::max(best, lyapunov_qr(prm, start, s.n_steps).value);
        }
        return best;
      }
      case Metric::Area:
        return chaotic_area(prm, s.n_tot, s.d_min, s.t_max_list, 1).a_ch;
      case Metric::Similarity:
        return phase_space_similarity(prm, s.d_alpha, s.d_k, s.n_tot, s.n_kicks, 1).s_bar;
      case Metric::Gamma:
        return spectrum_statistics(prm, *rep_, *jy_).gamma;
      case Metric::Delta:
        return floquet_delta(prm, *rep_, *jy_);
      case Metric::LambdaQ: {
        const auto u = floquet_operator(prm, *rep_, *jy_).matrix;
        const auto fit = fit_quantum_lyapunov(otoc_series(u, jz_, jz_, s.n_max));
        return fit.has_window ? fit.lambda_q : 0.0;
      }
    }
    throw std::logic_error("unhandled metric");
  }

 private:
  ScanSpec spec_;
  std::optional<SpinRepresentation> rep_;
  std::unique_ptr<JyEigenbasis> jy_;
  Eigen::MatrixXcd jz_;
};

struct ScanOptions {
  int parallelism = 0;                     // 0: default_thread_count()
  std::optional<std::size_t> max_cells;    // stop after this many new cells
  std::string checkpoint_path;             // empty: no checkpointing
  std::size_t checkpoint_every = 16;       // cells per checkpoint write
  std::function<void(std::size_t done, std::size_t total)> progress;
};

class ScanFileError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};
class VersionMismatch : public ScanFileError {
 public:
  using ScanFileError::ScanFileError;
};
class CorruptFile : public ScanFileError {
 public:
  using ScanFileError::ScanFileError;
};

namespace checkpoint_format {

inline constexpr char magic[8] = {'K', 'P', 'S', 'C', 'A', 'N', '\0', '\0'};
inline constexpr std::uint32_t version = 1;

class Writer {
 public:
  void bytes(const void* p, std::size_t n) { buf_.append(static_cast<const char*>(p), n); }
  void u8(std::uint8_t v) { buf_.push_back(static_cast<char>(v)); }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) u8(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) u8(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  const std::string& data() const { return buf_; }

 private:
  std::string buf_;
};

class Reader {
 public:
  explicit Reader(const std::string& buf) : buf_(buf) {}
  void need(std::size_t n) const {
    if (buf_.size() - pos_ < n) throw CorruptFile("checkpoint: truncated file");
  }
  std::string bytes(std::size_t n) {
    need(n);
    std::string s = buf_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  std::uint8_t u8() {
    need(1);
    return static_cast<std::uint8_t>(buf_[pos_++]);
  }
  std::uint32_t u32() {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(u8()) << (8 * i);
    return v;
  }
  std::uint64_t u64() {
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(u8()) << (8 * i);
    return v;
  }
  double f64() { return std::bit_cast<double>(u64()); }
  std::size_t pos() const { return pos_; }
  std::size_t size() const { return buf_.size(); }

 private:
  const std::string& buf_;
  std::size_t pos_ = 0;
};

}  // namespace checkpoint_format

// Layout (little-endian):
//   magic[8] "KPSCAN\0\0", u32 version, u64 spec digest (FNV-1a of the
//   spec JSON), u64 json length, json bytes, u64 rows, u64 cols,
//   rows*cols status bytes, rows*cols f64 values, u64 FNV-1a of all
//   preceding bytes.
// Written to a temporary sibling and renamed into place.
inline void write_checkpoint(const ScanTable& t, const std::string& path) {
  namespace cf = checkpoint_format;
  cf::Writer w;
  w.bytes(cf::magic, sizeof cf::magic);
  w.u32(cf::version);
  const std::string js = canonical_json(t.spec);
  w.u64(fnv1a(js.data(), js.size()));
  w.u64(js.size());
  w.bytes(js.data(), js.size());
  w.u64(t.rows());
  w.u64(t.cols());
  for (CellStatus s : t.status) w.u8(static_cast<std::uint8_t>(s));
  for (double v : t.values) w.f64(v);
  w.u64(fnv1a(w.data().data(), w.data().size()));

  const std::string tmp = path + ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw std::runtime_error("checkpoint: cannot open " + tmp);
    os.write(w.data().data(), static_cast<std::streamsize>(w.data().size()));
    os.flush();
    if (!os) throw std::runtime_error("checkpoint: write failed for " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

// Reads and fully validates a checkpoint before building the table.
inline ScanTable read_checkpoint(const std::string& path) {
  namespace cf = checkpoint_format;
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("checkpoint: cannot open " + path);
  std::ostringstream ss;
  ss << is.rdbuf();
  const std::string buf = ss.str();

  cf::Reader r(buf);
  if (buf.size() < sizeof cf::magic || std::memcmp(buf.data(), cf::magic, sizeof cf::magic) != 0)
    throw CorruptFile("checkpoint: bad magic in " + path);
  r.bytes(sizeof cf::magic);
  const std::uint32_t ver = r.u32();
  if (ver != cf::version)
    throw VersionMismatch("checkpoint: file version " + std::to_string(ver) + ", expected " +
                          std::to_string(cf::version));
  if (buf.size() < 8 + 4 + 8) throw CorruptFile("checkpoint: truncated file");
  const std::size_t body = buf.size() - 8;
  {
    cf::Reader tail(buf);
    tail.bytes(body);
    if (tail.u64() != fnv1a(buf.data(), body)) throw CorruptFile("checkpoint: checksum mismatch in " + path);
  }

  const std::uint64_t digest = r.u64();
  const std::uint64_t js_len = r.u64();
  if (js_len > body) throw CorruptFile("checkpoint: bad spec length");
  const std::string js = r.bytes(js_len);
  if (fnv1a(js.data(), js.size()) != digest) throw CorruptFile("checkpoint: spec digest mismatch");
  ScanSpec spec;
  try {
    spec = nlohmann::json::parse(js).get<ScanSpec>();
    spec.validate();
  } catch (const std::exception& e) {
    throw CorruptFile(std::string("checkpoint: invalid spec: ") + e.what());
  }
  const std::uint64_t rows = r.u64(), cols = r.u64();
  if (rows != spec.alpha_range.count || cols != spec.k_range.count)
    throw CorruptFile("checkpoint: grid dimensions disagree with spec");
  const std::size_t n = rows * cols;
  if (r.size() - r.pos() != n * 9 + 8) throw CorruptFile("checkpoint: payload size mismatch");

  ScanTable t(spec);
  for (std::size_t i = 0; i < n; ++i) {
    const std::uint8_t s = r.u8();
    if (s > 2) throw CorruptFile("checkpoint: bad cell status");
    t.status[i] = static_cast<CellStatus>(s);
  }
  for (std::size_t i = 0; i < n; ++i) {
    t.values[i] = r.f64();
    if (t.status[i] == CellStatus::Done && !std::isfinite(t.values[i]))
      throw CorruptFile("checkpoint: non-finite value in a completed cell");
  }
  return t;
}

// Evaluates the pending cells of t in row-major order. Each cell is a pure
// function of the spec and its indices, so results do not depend on the
// worker count or on where a previous run stopped.
inline void continue_scan(ScanTable& t, const ScanOptions& opt = {}) {
  t.spec.validate();
  std::vector<std::size_t> todo;
  for (std::size_t i = 0; i < t.status.size(); ++i)
    if (t.status[i] == CellStatus::Pending) todo.push_back(i);
  if (opt.max_cells && todo.size() > *opt.max_cells) todo.resize(*opt.max_cells);
  if (todo.empty()) {
    if (!opt.checkpoint_path.empty()) write_checkpoint(t, opt.checkpoint_path);
    return;
  }

  const CellEvaluator eval(t.spec);
  const int threads = opt.parallelism > 0 ? opt.parallelism : default_thread_count();
  const std::size_t batch = std::max<std::size_t>(1, opt.checkpoint_path.empty() ? todo.size() : opt.checkpoint_every);
  std::vector<std::string> errors(todo.size());
  for (std::size_t start = 0; start < todo.size(); start += batch) {
    const std::size_t stop = std::min(todo.size(), start + batch);
    parallel_for(stop - start, threads, [&](std::size_t b) {
      const std::size_t idx = todo[start + b];
      const std::size_t row = idx / t.cols(), col = idx % t.cols();
      try {
        const double v = eval(row, col);
        if (!std::isfinite(v)) throw std::runtime_error("non-finite value");
        t.values[idx] = v;
        t.status[idx] = CellStatus::Done;
      } catch (const std::exception& e) {
        t.values[idx] = std::numeric_limits<double>::quiet_NaN();
        t.status[idx] = CellStatus::Failed;
        errors[start + b] = e.what();
      }
    });
    for (std::size_t b = start; b < stop; ++b)
      if (t.status[todo[b]] == CellStatus::Failed)
        t.failures.push_back({todo[b] / t.cols(), todo[b] % t.cols(), errors[b]});
    if (!opt.checkpoint_path.empty()) write_checkpoint(t, opt.checkpoint_path);
    if (opt.progress) opt.progress(stop, todo.size());
  }
}

inline ScanTable run_scan(const ScanSpec& spec, const ScanOptions& opt = {}) {
  spec.validate();
  ScanTable t(spec);
  continue_scan(t, opt);
  return t;
}

inline ScanTable run_scan(const ScanSpec& spec, int parallelism) {
  ScanOptions opt;
  opt.parallelism = parallelism;
  return run_scan(spec, opt);
}

// Loads a checkpoint and evaluates only its pending cells.
inline ScanTable resume(const std::string& path, ScanOptions opt = {}) {
  ScanTable t = read_checkpoint(path);
  if (opt.checkpoint_path.empty()) opt.checkpoint_path = path;
  continue_scan(t, opt);
  return t;
}

}  // namespace kpspin
