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

#include "gentlerain/wire.hpp"

namespace gentlerain {

namespace {

class Writer {
 public:
  void u8(std::uint8_t v) { out_.push_back(static_cast<char>(v)); }
  void u16(std::uint16_t v) {
    u8(static_cast<std::uint8_t>(v >> 8));
    u8(static_cast<std::uint8_t>(v));
  }
  void u32(std::uint32_t v) {
    for (int s = 24; s >= 0; s -= 8) u8(static_cast<std::uint8_t>(v >> s));
  }
  void u64(std::uint64_t v) {
    for (int s = 56; s >= 0; s -= 8) u8(static_cast<std::uint8_t>(v >> s));
  }
  void ts(const HlcTimestamp& t) { u64(encode_compact(t)); }
  void str(std::string_view s) {
    if (s.size() > 0xFFFF) {
      throw FrameError("string of " + std::to_string(s.size()) + " bytes exceeds 65535");
    }
    u16(static_cast<std::uint16_t>(s.size()));
    out_.append(s);
  }
  std::string take() { return std::move(out_); }

 private:
  std::string out_;
};

class Reader {
 public:
  explicit Reader(std::string_view in) : in_(in) {}

  std::uint8_t u8() {
    need(1);
    return static_cast<std::uint8_t>(in_[pos_++]);
  }
  std::uint16_t u16() {
    std::uint16_t hi = u8();
    return static_cast<std::uint16_t>((hi << 8) | u8());
  }
  std::uint64_t u64() {
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v = (v << 8) | u8();
    return v;
  }
  HlcTimestamp ts() { return decode_compact(u64()); }
  std::string str() {
    const std::uint16_t n = u16();
    need(n);
    std::string s(in_.substr(pos_, n));
    pos_ += n;
    return s;
  }
  void finish() const {
    if (pos_ != in_.size()) {
      throw FrameError(std::to_string(in_.size() - pos_) + " trailing bytes in frame body");
    }
  }

 private:
  void need(std::size_t n) const {
    if (in_.size() - pos_ < n) throw FrameError("frame body truncated");
  }
  std::string_view in_;
  std::size_t pos_ = 0;
};

std::string wrap(std::uint8_t type, std::string body) {
  if (body.size() > kMaxFrameBody) throw FrameError("frame body too large");
  Writer w;
  w.u32(static_cast<std::uint32_t>(body.size()));
  w.u8(type);
  std::string out = w.take();
  out += body;
  return out;
}

}  // namespace

std::string encode_frame(const Message& msg) {
  Writer w;
  std::visit(
      [&](const auto& m) {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, GetReq>) {
          w.str(m.key);
          w.ts(m.gst);
        } else if constexpr (std::is_same_v<T, GetReply>) {
          w.str(m.value);
          w.ts(m.ut);
          w.ts(m.gst);
        } else if constexpr (std::is_same_v<T, PutReq>) {
          w.str(m.key);
          w.str(m.value);
          w.ts(m.dt);
        } else if constexpr (std::is_same_v<T, PutReply>) {
          w.ts(m.ut);
        } else if constexpr (std::is_same_v<T, Replicate>) {
          w.str(m.d.key);
          w.str(m.d.value);
          w.ts(m.d.ut);
          w.u16(m.d.sr);
        } else if constexpr (std::is_same_v<T, Heartbeat>) {
          w.ts(m.ts);
          w.u16(m.from);
        } else if constexpr (std::is_same_v<T, LstReport>) {
          w.ts(m.lst);
          w.u16(m.partition);
        } else if constexpr (std::is_same_v<T, GstBroadcast>) {
          w.ts(m.gst);
        }
      },
      msg);
  return wrap(static_cast<std::uint8_t>(kind_of(msg)), w.take());
}

std::string encode_error_frame(std::string_view message) {
  Writer w;
  w.str(message.substr(0, 0xFFFF));
  return wrap(kErrorFrameType, w.take());
}

std::size_t parse_frame(std::string_view buf, Frame& out) {
  if (buf.size() < kFrameHeaderSize) return 0;
  std::uint32_t len = 0;
  for (int i = 0; i < 4; ++i) len = (len << 8) | static_cast<std::uint8_t>(buf[i]);
  const auto type = static_cast<std::uint8_t>(buf[4]);
  if (len > kMaxFrameBody) {
    throw FrameError("frame length " + std::to_string(len) + " exceeds limit");
  }
  if ((type < 0x01 || type > 0x08) && type != kErrorFrameType) {
    throw FrameError("unknown frame type " + std::to_string(type));
  }
  if (buf.size() < kFrameHeaderSize + len) return 0;
  out.type = type;
  out.body.assign(buf.substr(kFrameHeaderSize, len));
  return kFrameHeaderSize + len;
}

Message decode_message(const Frame& frame) {
  Reader r(frame.body);
  Message msg;
  switch (frame.type) {
    case 0x01: {
      GetReq m;
      m.key = r.str();
      m.gst = r.ts();
      msg = std::move(m);
      break;
    }
    case 0x02: {
      GetReply m;
      m.value = r.str();
      m.ut = r.ts();
      m.gst = r.ts();
      msg = std::move(m);
      break;
    }
    case 0x03: {
      PutReq m;
      m.key = r.str();
      m.value = r.str();
      m.dt = r.ts();
      msg = std::move(m);
      break;
    }
    case 0x04: msg = PutReply{r.ts()}; break;
    case 0x05: {
      Version d;
      d.key = r.str();
      d.value = r.str();
      d.ut = r.ts();
      d.sr = r.u16();
      msg = Replicate{std::move(d)};
      break;
    }
    case 0x06: {
      Heartbeat m;
      m.ts = r.ts();
      m.from = r.u16();
      msg = m;
      break;
    }
    case 0x07: {
      LstReport m;
      m.lst = r.ts();
      m.partition = r.u16();
      msg = m;
      break;
    }
    case 0x08: msg = GstBroadcast{r.ts()}; break;
    case kErrorFrameType: {
      const std::string text = r.str();
      throw FrameError("peer error: " + text);
    }
    default: throw FrameError("unknown frame type " + std::to_string(frame.type));
  }
  r.finish();
  return msg;
}

Message decode_frame(std::string_view bytes) {
  Frame f;
  const std::size_t used = parse_frame(bytes, f);
  if (used == 0) throw FrameError("incomplete frame");
  if (used != bytes.size()) throw FrameError("bytes after the frame");
  return decode_message(f);
}

}  // namespace gentlerain
