#include "incfed/environment.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <random>
#include <string>
#include <string_view>

#include "incfed/error.hpp"

namespace incfed {

namespace {

Vector uniform_on_sphere(std::mt19937_64& rng, std::size_t dim) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  Vector v(static_cast<Index>(dim));
  double norm = 0.0;
  // A zero draw has probability zero but would make normalization undefined.
  do {
    for (Index i = 0; i < v.size(); ++i) v[i] = gauss(rng);
    norm = v.norm();
  } while (norm == 0.0);
  return v / norm;
}

// Whitespace tokenizer over one line; numbers are parsed with from_chars so the
// format does not depend on the global locale.
class LineReader {
 public:
  LineReader(std::istream& in) : in_(in) {}

  // Advances to the next non-blank line. Returns false at end of input.
  bool next() {
    while (std::getline(in_, line_)) {
      ++line_no_;
      pos_ = 0;
      if (line_.find_first_not_of(" \t\r") != std::string::npos) return true;
    }
    line_.clear();
    pos_ = 0;
    ++line_no_;
    return false;
  }

  std::size_t line_no() const { return line_no_; }

  template <class T>
  T read(const char* what) {
    const std::string_view tok = token();
    if (tok.empty()) throw DatasetError(line_no_, std::string("missing ") + what);
    T value{};
    const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), value);
    if (ec != std::errc{} || ptr != tok.data() + tok.size()) {
      throw DatasetError(line_no_, std::string("cannot parse ") + what + " from '" +
                                       std::string(tok) + "'");
    }
    return value;
  }

  void expect_end() {
    if (!token().empty()) throw DatasetError(line_no_, "unexpected extra fields");
  }

 private:
  std::string_view token() {
    const std::string_view rest = std::string_view(line_).substr(pos_);
    const auto start = rest.find_first_not_of(" \t\r");
    if (start == std::string_view::npos) {
      pos_ = line_.size();
      return {};
    }
    auto end = rest.find_first_of(" \t\r", start);
    if (end == std::string_view::npos) end = rest.size();
    pos_ += end;
    return rest.substr(start, end - start);
  }

  std::istream& in_;
  std::string line_;
  std::size_t pos_ = 0;
  std::size_t line_no_ = 0;
};

void write_double(std::ostream& out, double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  out.write(buf, res.ptr - buf);
}

}  // namespace

void EnvConfig::validate() const {
  if (n_clients < 1) throw ConfigError("N", "must be >= 1");
  if (horizon < 1) throw ConfigError("T", "must be >= 1");
  if (dim < 1) throw ConfigError("d", "must be >= 1");
  if (pool_size < 1) throw ConfigError("K", "must be >= 1");
  if (!(noise_sigma >= 0.0) || !std::isfinite(noise_sigma)) {
    throw ConfigError("sigma", "noise scale must be >= 0");
  }
}

Environment Environment::synthetic(const EnvConfig& cfg) {
  cfg.validate();
  Environment env;
  env.mode_ = EnvMode::synthetic;
  env.n_clients_ = cfg.n_clients;
  env.dim_ = cfg.dim;
  env.pool_size_ = cfg.pool_size;

  std::mt19937_64 rng(cfg.seed);
  env.theta_star_ = uniform_on_sphere(rng, cfg.dim);
  const Vector& theta = *env.theta_star_;

  std::uniform_int_distribution<std::size_t> pick_client(0, cfg.n_clients - 1);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const auto d = static_cast<Index>(cfg.dim);
  const auto K = static_cast<Index>(cfg.pool_size);

  env.rounds_.reserve(cfg.horizon);
  for (std::size_t t = 1; t <= cfg.horizon; ++t) {
    Round r;
    r.obs.step = t;
    r.obs.active_client = pick_client(rng);
    r.obs.arms.resize(d, K);
    for (Index k = 0; k < K; ++k) r.obs.arms.col(k) = uniform_on_sphere(rng, cfg.dim);
    r.rewards.resize(K);
    for (Index k = 0; k < K; ++k) {
      const double z = gauss(rng);
      r.rewards[k] = r.obs.arms.col(k).dot(theta);
      if (cfg.noise_sigma > 0.0) r.rewards[k] += cfg.noise_sigma * z;
    }
    env.rounds_.push_back(std::move(r));
  }
  return env;
}

Environment Environment::from_rounds(std::size_t n_clients, std::vector<LoggedRound> rounds) {
  if (n_clients < 1) throw ConfigError("N", "must be >= 1");
  if (rounds.empty()) throw ConfigError("T", "dataset has no rounds");
  Environment env;
  env.mode_ = EnvMode::dataset;
  env.n_clients_ = n_clients;
  env.dim_ = static_cast<std::size_t>(rounds.front().arms.rows());
  env.pool_size_ = static_cast<std::size_t>(rounds.front().arms.cols());
  if (env.dim_ < 1 || env.pool_size_ < 1) throw ConfigError("d", "empty arm matrix");

  env.rounds_.reserve(rounds.size());
  std::size_t t = 0;
  for (auto& lr : rounds) {
    ++t;
    if (static_cast<std::size_t>(lr.arms.rows()) != env.dim_ ||
        static_cast<std::size_t>(lr.arms.cols()) != env.pool_size_ ||
        static_cast<std::size_t>(lr.rewards.size()) != env.pool_size_) {
      throw ConfigError("rounds", "round " + std::to_string(t) + " has inconsistent shape");
    }
    if (lr.client >= n_clients) {
      throw ConfigError("rounds", "round " + std::to_string(t) + " has client out of range");
    }
    if (!lr.arms.allFinite() || !lr.rewards.allFinite()) {
      throw ConfigError("rounds", "round " + std::to_string(t) + " has non-finite values");
    }
    Round r;
    r.obs.step = t;
    r.obs.active_client = lr.client;
    r.obs.arms = std::move(lr.arms);
    r.rewards = std::move(lr.rewards);
    env.rounds_.push_back(std::move(r));
  }
  return env;
}

Environment Environment::parse_dataset(std::istream& in) {
  LineReader reader(in);
  if (!reader.next()) throw DatasetError(reader.line_no(), "missing header 'N T d K'");
  const auto N = reader.read<std::size_t>("N");
  const auto T = reader.read<std::size_t>("T");
  const auto d = reader.read<std::size_t>("d");
  const auto K = reader.read<std::size_t>("K");
  reader.expect_end();
  if (N < 1 || T < 1 || d < 1 || K < 1) {
    throw DatasetError(reader.line_no(), "header values must all be >= 1");
  }

  std::vector<LoggedRound> rounds;
  rounds.reserve(T);
  for (std::size_t t = 1; t <= T; ++t) {
    if (!reader.next()) {
      throw DatasetError(reader.line_no(), "truncated: expected round " + std::to_string(t));
    }
    const auto step = reader.read<std::size_t>("step");
    const auto client = reader.read<std::size_t>("client_id");
    reader.expect_end();
    if (step != t) {
      throw DatasetError(reader.line_no(),
                         "expected step " + std::to_string(t) + ", got " + std::to_string(step));
    }
    if (client < 1 || client > N) {
      throw DatasetError(reader.line_no(), "client_id out of range [1, N]");
    }
    LoggedRound lr;
    lr.client = client - 1;
    lr.arms.resize(static_cast<Index>(d), static_cast<Index>(K));
    lr.rewards.resize(static_cast<Index>(K));
    for (std::size_t k = 0; k < K; ++k) {
      if (!reader.next()) {
        throw DatasetError(reader.line_no(), "truncated round " + std::to_string(t));
      }
      for (std::size_t j = 0; j < d; ++j) {
        lr.arms(static_cast<Index>(j), static_cast<Index>(k)) = reader.read<double>("feature");
      }
      lr.rewards[static_cast<Index>(k)] = reader.read<double>("reward");
      reader.expect_end();
    }
    if (!lr.arms.allFinite() || !lr.rewards.allFinite()) {
      throw DatasetError(reader.line_no(), "non-finite value in round " + std::to_string(t));
    }
    rounds.push_back(std::move(lr));
  }
  if (reader.next()) throw DatasetError(reader.line_no(), "trailing data after last round");
  return from_rounds(N, std::move(rounds));
}

Environment Environment::load_dataset(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DatasetError(0, "cannot open " + path.string());
  return parse_dataset(in);
}

void Environment::save_dataset(std::ostream& out) const {
  out << n_clients_ << ' ' << horizon() << ' ' << dim_ << ' ' << pool_size_ << '\n';
  for (const auto& r : rounds_) {
    out << r.obs.step << ' ' << (r.obs.active_client + 1) << '\n';
    for (Index k = 0; k < r.obs.arms.cols(); ++k) {
      for (Index j = 0; j < r.obs.arms.rows(); ++j) {
        write_double(out, r.obs.arms(j, k));
        out << ' ';
      }
      write_double(out, r.rewards[k]);
      out << '\n';
    }
  }
}

const Environment::Round& Environment::round(std::size_t t) const {
  if (t < 1 || t > rounds_.size()) {
    throw std::out_of_range("step " + std::to_string(t) + " outside [1, " +
                            std::to_string(rounds_.size()) + "]");
  }
  return rounds_[t - 1];
}

void Environment::require_synthetic(const char* op) const {
  if (mode_ != EnvMode::synthetic) {
    throw UnsupportedMode(std::string(op) + " is only defined for synthetic environments");
  }
}

const RoundObservation& Environment::step(std::size_t t) const { return round(t).obs; }

double Environment::draw_reward(std::size_t t, std::size_t arm) const {
  const Round& r = round(t);
  if (arm >= r.obs.pool_size()) throw std::out_of_range("arm index out of range");
  return r.rewards[static_cast<Index>(arm)];
}

double Environment::expected_reward(std::size_t t, std::size_t arm) const {
  require_synthetic("expected_reward");
  const Round& r = round(t);
  if (arm >= r.obs.pool_size()) throw std::out_of_range("arm index out of range");
  return r.obs.arm(arm).dot(*theta_star_);
}

double Environment::best_expected(std::size_t t) const {
  require_synthetic("best_expected");
  const Round& r = round(t);
  double best = r.obs.arm(0).dot(*theta_star_);
  for (std::size_t k = 1; k < r.obs.pool_size(); ++k) {
    best = std::max(best, r.obs.arm(k).dot(*theta_star_));
  }
  return best;
}

const Vector& Environment::theta_star() const {
  require_synthetic("theta_star");
  return *theta_star_;
}

}  // namespace incfed
