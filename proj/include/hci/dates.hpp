#pragma once

#include <compare>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace hci {

// Calendar date held as days since 1970-01-01 (proleptic Gregorian).
// Day-count form keeps date keys cheap to hash into RNG streams and
// trivial to difference for cadence checks.
class Date {
 public:
  Date() : serial_(0) {}
  explicit Date(std::int32_t serial) : serial_(serial) {}

  static Date from_ymd(int y, unsigned m, unsigned d);
  // Parses strict ISO-8601 "YYYY-MM-DD"; throws DataError on anything else.
  static Date parse(const std::string& text);

  std::int32_t serial() const { return serial_; }
  std::string iso() const;
  Date plus_days(std::int32_t n) const { return Date(serial_ + n); }

  auto operator<=>(const Date&) const = default;

 private:
  std::int32_t serial_;
};

// Errors raised by malformed or contract-violating input data. The CLI maps
// these to exit code 2; anything else unexpected maps to 3.
class DataError : public std::runtime_error {
 public:
  explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace hci
