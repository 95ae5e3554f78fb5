//  Copyright 2026 The GentleRain+ Authors
//
//  Licensed under the Apache License, Version 2.0 (the "License");
//  you may not use this file except in compliance with the License.
//  You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
//  Unless required by applicable law or agreed to in writing, software
//  distributed under the License is distributed on an "AS IS" BASIS,
//  WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
//  See the License for the specific language governing permissions and
//  limitations under the License.

#ifndef GENTLERAIN_HLC_HPP_
#define GENTLERAIN_HLC_HPP_

#include <compare>
#include <cstdint>
#include <iosfwd>
#include <stdexcept>
#include <string>

namespace gentlerain {

/// Physical time in whole microseconds.
using Micros = std::int64_t;

class HlcError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A field does not fit the 48/16-bit compact layout.
class EncodingError : public HlcError {
 public:
  using HlcError::HlcError;
};

/// The logical counter would pass 2^16 - 1.
class CounterExhausted : public HlcError {
 public:
  using HlcError::HlcError;
};

/// Hybrid logical clock value. `l` carries microseconds since the epoch
/// (48-bit range), `c` the causality counter (16-bit range). Ordered
/// lexicographically on (l, c).
struct HlcTimestamp {
  static constexpr std::uint64_t kMaxL = (std::uint64_t{1} << 48) - 1;
  static constexpr std::uint32_t kMaxC = 0xFFFF;

  std::uint64_t l = 0;
  std::uint32_t c = 0;

  friend constexpr auto operator<=>(const HlcTimestamp&,
                                    const HlcTimestamp&) = default;

  bool valid() const { return l <= kMaxL && c <= kMaxC; }
  std::string str() const;
};

std::ostream& operator<<(std::ostream& os, const HlcTimestamp& ts);

std::strong_ordering compare(const HlcTimestamp& a, const HlcTimestamp& b);

/// (l << 16) | c. Throws EncodingError when a field is out of range.
std::uint64_t encode_compact(const HlcTimestamp& ts);
HlcTimestamp decode_compact(std::uint64_t word);

/// The clock register of one node. Every update returns a timestamp
/// strictly greater than the previous register value.
/// Host wall clock in whole microseconds since 2024-01-01T00:00:00Z. The
/// Unix epoch does not fit the 48-bit l field.
Micros wall_clock_micros();

class HlcState {
 public:
  HlcState() = default;
  explicit HlcState(HlcTimestamp initial) : current_(initial) {}

  const HlcTimestamp& current() const { return current_; }

  /// Send or local event.
  HlcTimestamp send_local(Micros pt);
  /// Receive of a message stamped `m`.
  HlcTimestamp receive(const HlcTimestamp& m, Micros pt);
  /// PUT handling: the new register exceeds both the old one and `dt`.
  HlcTimestamp update_for_put(Micros pt, const HlcTimestamp& dt);
  /// Heartbeat clock advance.
  HlcTimestamp update(Micros pt);

 private:
  HlcTimestamp current_;
};

}  // namespace gentlerain

#endif  // GENTLERAIN_HLC_HPP_
