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

// Framed wire format. A frame is a 32-bit big-endian body length, a type
// byte and the body. Timestamps travel in the 64-bit compact encoding,
// strings with a 16-bit length prefix, ids as 16-bit integers; all integers
// are big-endian.

#ifndef GENTLERAIN_WIRE_HPP_
#define GENTLERAIN_WIRE_HPP_

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

#include "gentlerain/protocol.hpp"

namespace gentlerain {

class FrameError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Carries a peer-side failure description back to the sender.
constexpr std::uint8_t kErrorFrameType = 0xFF;
constexpr std::size_t kFrameHeaderSize = 5;
constexpr std::uint32_t kMaxFrameBody = 1u << 20;

struct Frame {
  std::uint8_t type = 0;
  std::string body;
};

std::string encode_frame(const Message& msg);
std::string encode_error_frame(std::string_view message);

/// Parses the frame at the start of buf. Returns the bytes consumed, or 0
/// when buf does not yet hold a whole frame. Throws FrameError on an
/// unknown type byte or a length above kMaxFrameBody.
std::size_t parse_frame(std::string_view buf, Frame& out);

/// Throws FrameError for error frames (with the carried message) and for
/// bodies that do not match their type.
Message decode_message(const Frame& frame);

/// Decodes a buffer holding exactly one frame.
Message decode_frame(std::string_view bytes);

}  // namespace gentlerain

#endif  // GENTLERAIN_WIRE_HPP_
