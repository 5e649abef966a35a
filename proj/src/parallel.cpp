#include "ntlgen/parallel.hpp"

#include <algorithm>
#include <cstdlib>
#include <exception>
#include <string>
#include <thread>
#include <vector>

namespace ntlgen {

std::size_t max_threads() {
  if (const char* env = std::getenv("NTLGEN_THREADS")) {
    try {
      const long v = std::stol(env);
      if (v >= 1) return static_cast<std::size_t>(v);
    } catch (const std::exception&) {
    }
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

void parallel_for(std::size_t begin, std::size_t end, std::size_t min_chunk,
                  const std::function<void(std::size_t, std::size_t)>& body) {
  if (end <= begin) return;
  const std::size_t count = end - begin;
  min_chunk = std::max<std::size_t>(1, min_chunk);
  const std::size_t workers = std::min(max_threads(), (count + min_chunk - 1) / min_chunk);
  if (workers <= 1) {
    body(begin, end);
    return;
  }
  const std::size_t per = (count + workers - 1) / workers;
  std::vector<std::exception_ptr> errors(workers);
  std::vector<std::jthread> threads;
  threads.reserve(workers - 1);
  for (std::size_t w = 1; w < workers; ++w) {
    const std::size_t lo = begin + w * per;
    const std::size_t hi = std::min(end, lo + per);
    if (lo >= hi) break;
    threads.emplace_back([&, w, lo, hi] {
      try {
        body(lo, hi);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  try {
    body(begin, std::min(end, begin + per));
  } catch (...) {
    errors[0] = std::current_exception();
  }
  threads.clear();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace ntlgen
