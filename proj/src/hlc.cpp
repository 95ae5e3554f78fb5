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

#include "gentlerain/hlc.hpp"

#include <algorithm>
#include <chrono>
#include <ostream>

namespace gentlerain {

namespace {

std::uint64_t checked_pt(Micros pt) {
  if (pt < 0 || static_cast<std::uint64_t>(pt) > HlcTimestamp::kMaxL) {
    throw HlcError("physical time " + std::to_string(pt) +
                   " outside the 48-bit microsecond range");
  }
  return static_cast<std::uint64_t>(pt);
}

std::uint32_t bump(std::uint32_t c) {
  if (c >= HlcTimestamp::kMaxC) {
    throw CounterExhausted("hlc counter exhausted at l-tie; clock drift too large");
  }
  return c + 1;
}

// Shared by send/local and updateHLC: l follows the larger of the register
// and the physical clock; c counts events that did not move l.
HlcTimestamp advance_local(HlcTimestamp& cur, Micros pt) {
  const std::uint64_t prev_l = cur.l;
  const std::uint64_t next_l = std::max(prev_l, checked_pt(pt));
  const std::uint32_t next_c = next_l == prev_l ? bump(cur.c) : 0;
  cur = HlcTimestamp{next_l, next_c};
  return cur;
}

// Shared by message receive and updateHLCforPut.
HlcTimestamp advance_merge(HlcTimestamp& cur, const HlcTimestamp& m, Micros pt) {
  const std::uint64_t prev_l = cur.l;
  const std::uint64_t next_l = std::max({prev_l, m.l, checked_pt(pt)});
  std::uint32_t next_c = 0;
  if (next_l == prev_l && next_l == m.l) {
    next_c = bump(std::max(cur.c, m.c));
  } else if (next_l == prev_l) {
    next_c = bump(cur.c);
  } else if (next_l == m.l) {
    next_c = bump(m.c);
  }
  cur = HlcTimestamp{next_l, next_c};
  return cur;
}

}  // namespace

Micros wall_clock_micros() {
  constexpr std::int64_t kEpoch2024 = 1'704'067'200'000'000;  // Unix micros
  const auto now = std::chrono::time_point_cast<std::chrono::microseconds>(
      std::chrono::system_clock::now());
  return now.time_since_epoch().count() - kEpoch2024;
}

std::string HlcTimestamp::str() const {
  return "(" + std::to_string(l) + "," + std::to_string(c) + ")";
}

std::ostream& operator<<(std::ostream& os, const HlcTimestamp& ts) {
  return os << ts.str();
}

std::strong_ordering compare(const HlcTimestamp& a, const HlcTimestamp& b) {
  return a <=> b;
}

std::uint64_t encode_compact(const HlcTimestamp& ts) {
  if (ts.l > HlcTimestamp::kMaxL) {
    throw EncodingError("l=" + std::to_string(ts.l) + " exceeds 48 bits");
  }
  if (ts.c > HlcTimestamp::kMaxC) {
    throw EncodingError("c=" + std::to_string(ts.c) + " exceeds 16 bits");
  }
  return (ts.l << 16) | ts.c;
}

HlcTimestamp decode_compact(std::uint64_t word) {
  return HlcTimestamp{word >> 16, static_cast<std::uint32_t>(word & 0xFFFF)};
}

HlcTimestamp HlcState::send_local(Micros pt) { return advance_local(current_, pt); }

HlcTimestamp HlcState::receive(const HlcTimestamp& m, Micros pt) {
  return advance_merge(current_, m, pt);
}

HlcTimestamp HlcState::update_for_put(Micros pt, const HlcTimestamp& dt) {
  return advance_merge(current_, dt, pt);
}

HlcTimestamp HlcState::update(Micros pt) { return advance_local(current_, pt); }

}  // namespace gentlerain
