#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <optional>
#include <thread>
#include <type_traits>
#include <vector>

namespace guikit {

// Applies fn(item, index) to every item on up to `jobs` threads and returns
// the results in input order. The first exception (by index) is rethrown
// after all workers finish.
template <class In, class Fn>
auto parallel_map(const std::vector<In>& items, Fn fn, unsigned jobs)
    -> std::vector<std::invoke_result_t<Fn&, const In&, std::size_t>> {
  using Out = std::invoke_result_t<Fn&, const In&, std::size_t>;
  const std::size_t n = items.size();
  std::vector<std::optional<Out>> slots(n);
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> cursor{0};

  auto work = [&] {
    for (std::size_t i = cursor.fetch_add(1); i < n; i = cursor.fetch_add(1)) {
      try {
        slots[i].emplace(fn(items[i], i));
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };

  const std::size_t workers = std::min<std::size_t>(std::max(1u, jobs), n);
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
  }

  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  std::vector<Out> out;
  out.reserve(n);
  for (auto& s : slots) out.push_back(std::move(*s));
  return out;
}

}  // namespace guikit
