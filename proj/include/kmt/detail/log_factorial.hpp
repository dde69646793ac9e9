#pragma once

namespace kmt::detail {

// ln(n!) for n >= 0. Thread-safe.
double log_factorial(long n);

inline double log_choose(long n, long k) {
  return log_factorial(n) - log_factorial(k) - log_factorial(n - k);
}

}  // namespace kmt::detail
