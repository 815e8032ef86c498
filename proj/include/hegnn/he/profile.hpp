// SPDX-License-Identifier: Apache-2.0
//
// Operation profiler. Counters are atomic so independent ciphertext pipelines
// may share one backend instance; everything else in the library is
// const-after-construction. Depth is tracked as the maximum number of levels
// consumed below the fresh level by any ciphertext the backend produced.

#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <string>

#include <nlohmann/json.hpp>

namespace hegnn::he {

struct OpProfile {
  std::uint64_t add = 0;
  std::uint64_t add_plain = 0;
  std::uint64_t mult_ct = 0;
  std::uint64_t mult_plain = 0;
  std::uint64_t rotate = 0;
  std::uint64_t rescale = 0;
  std::uint64_t relinearize = 0;
  int max_depth = 0;
  double wall_time_ms = 0.0;

  std::uint64_t total_mults() const { return mult_ct + mult_plain; }

  OpProfile operator-(const OpProfile& base) const {
    OpProfile d;
    d.add = add - base.add;
    d.add_plain = add_plain - base.add_plain;
    d.mult_ct = mult_ct - base.mult_ct;
    d.mult_plain = mult_plain - base.mult_plain;
    d.rotate = rotate - base.rotate;
    d.rescale = rescale - base.rescale;
    d.relinearize = relinearize - base.relinearize;
    d.max_depth = max_depth;  // depth is a high-water mark, not a rate
    d.wall_time_ms = wall_time_ms - base.wall_time_ms;
    return d;
  }

  bool operator==(const OpProfile& o) const {
    return add == o.add && add_plain == o.add_plain && mult_ct == o.mult_ct &&
           mult_plain == o.mult_plain && rotate == o.rotate && rescale == o.rescale &&
           relinearize == o.relinearize && max_depth == o.max_depth;
  }
};

inline void to_json(nlohmann::json& j, const OpProfile& p) {
  j = nlohmann::json{{"add", p.add},
                     {"add_plain", p.add_plain},
                     {"mult_ct", p.mult_ct},
                     {"mult_plain", p.mult_plain},
                     {"rotate", p.rotate},
                     {"rescale", p.rescale},
                     {"relinearize", p.relinearize},
                     {"max_depth", p.max_depth},
                     {"wall_time_ms", p.wall_time_ms}};
}

inline void from_json(const nlohmann::json& j, OpProfile& p) {
  j.at("add").get_to(p.add);
  j.at("add_plain").get_to(p.add_plain);
  j.at("mult_ct").get_to(p.mult_ct);
  j.at("mult_plain").get_to(p.mult_plain);
  j.at("rotate").get_to(p.rotate);
  j.at("rescale").get_to(p.rescale);
  j.at("relinearize").get_to(p.relinearize);
  j.at("max_depth").get_to(p.max_depth);
  j.at("wall_time_ms").get_to(p.wall_time_ms);
}

class Profiler {
 public:
  void count_add() { add_.fetch_add(1, std::memory_order_relaxed); }
  void count_add_plain() { add_plain_.fetch_add(1, std::memory_order_relaxed); }
  void count_mult_ct() { mult_ct_.fetch_add(1, std::memory_order_relaxed); }
  void count_mult_plain() { mult_plain_.fetch_add(1, std::memory_order_relaxed); }
  void count_rotate() { rotate_.fetch_add(1, std::memory_order_relaxed); }
  void count_rescale() { rescale_.fetch_add(1, std::memory_order_relaxed); }
  void count_relinearize() { relinearize_.fetch_add(1, std::memory_order_relaxed); }

  void observe_depth(int depth) {
    int cur = max_depth_.load(std::memory_order_relaxed);
    while (depth > cur &&
           !max_depth_.compare_exchange_weak(cur, depth, std::memory_order_relaxed)) {
    }
  }

  void add_wall_time_ms(double ms) {
    // Stored in microseconds so the counter stays an integer atomic.
    wall_us_.fetch_add(static_cast<std::uint64_t>(ms * 1000.0),
                       std::memory_order_relaxed);
  }

  OpProfile snapshot() const {
    OpProfile p;
    p.add = add_.load(std::memory_order_relaxed);
    p.add_plain = add_plain_.load(std::memory_order_relaxed);
    p.mult_ct = mult_ct_.load(std::memory_order_relaxed);
    p.mult_plain = mult_plain_.load(std::memory_order_relaxed);
    p.rotate = rotate_.load(std::memory_order_relaxed);
    p.rescale = rescale_.load(std::memory_order_relaxed);
    p.relinearize = relinearize_.load(std::memory_order_relaxed);
    p.max_depth = max_depth_.load(std::memory_order_relaxed);
    p.wall_time_ms = static_cast<double>(wall_us_.load(std::memory_order_relaxed)) / 1000.0;
    return p;
  }

  void reset() {
    add_ = add_plain_ = mult_ct_ = mult_plain_ = 0;
    rotate_ = rescale_ = relinearize_ = 0;
    max_depth_ = 0;
    wall_us_ = 0;
  }

 private:
  std::atomic<std::uint64_t> add_{0}, add_plain_{0}, mult_ct_{0}, mult_plain_{0};
  std::atomic<std::uint64_t> rotate_{0}, rescale_{0}, relinearize_{0};
  std::atomic<int> max_depth_{0};
  std::atomic<std::uint64_t> wall_us_{0};
};

// RAII helper: captures the counter delta (and wall time) over a scope.
template <class Backend>
class ProfileScope {
 public:
  explicit ProfileScope(Backend& backend)
      : backend_(backend),
        base_(backend.profile()),
        start_(std::chrono::steady_clock::now()) {}

  OpProfile delta() const {
    OpProfile d = backend_.profile() - base_;
    d.wall_time_ms = std::chrono::duration<double, std::milli>(
                         std::chrono::steady_clock::now() - start_)
                         .count();
    return d;
  }

 private:
  Backend& backend_;
  OpProfile base_;
  std::chrono::steady_clock::time_point start_;
};

}  // namespace hegnn::he
