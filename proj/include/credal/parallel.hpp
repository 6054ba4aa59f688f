#pragma once

#include <cstddef>
#include <exception>
#include <mutex>

namespace credal {

/// Number of OpenMP threads (1 when built without OpenMP).
int max_threads();
/// Sets the OpenMP thread count; no-op without OpenMP.
void set_threads(int n);

/// Exceptions cannot cross an OpenMP region boundary; workers park the first
/// one here and the caller rethrows after the loop.
class ExceptionSlot {
 public:
  template <class F>
  void run(F&& f) noexcept {
    try {
      f();
    } catch (...) {
      std::lock_guard<std::mutex> lock(mu_);
      if (!first_) first_ = std::current_exception();
    }
  }
  void rethrow() const {
    if (first_) std::rethrow_exception(first_);
  }

 private:
  std::mutex mu_;
  std::exception_ptr first_;
};

}  // namespace credal
