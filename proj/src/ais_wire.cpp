#include "dfcr/ais_wire.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "dfcr/error.hpp"

namespace dfcr::ais {

namespace {

// ITU-R M.1371 6-bit text alphabet.
constexpr std::string_view kSixBitText = "@ABCDEFGHIJKLMNOPQRSTUVWXYZ[\\]^_ !\"#$%&'()*+,-./0123456789:;<=>?";

constexpr int kNameChars = 20;
constexpr int kPositionBits = 168;
constexpr int kStaticBits = 424;

// Minutes * 10000 per degree.
constexpr double kPositionScale = 600000.0;

class BitWriter {
 public:
  void put(std::uint64_t value, int width) {
    for (int b = width - 1; b >= 0; --b) bits_.push_back(((value >> b) & 1u) != 0);
  }
  void put_signed(std::int64_t value, int width) {
    put(static_cast<std::uint64_t>(value) & ((std::uint64_t{1} << width) - 1), width);
  }
  void put_text(const std::string& text, int chars) {
    for (int i = 0; i < chars; ++i) {
      const char c = i < static_cast<int>(text.size()) ? text[static_cast<std::size_t>(i)] : '@';
      put(kSixBitText.find(c), 6);
    }
  }
  std::size_t size() const { return bits_.size(); }

  // Returns the armored payload and the number of fill bits appended.
  std::pair<std::string, int> armor() const {
    std::vector<bool> padded = bits_;
    const int fill = static_cast<int>((6 - padded.size() % 6) % 6);
    padded.insert(padded.end(), static_cast<std::size_t>(fill), false);
    std::string out;
    for (std::size_t i = 0; i < padded.size(); i += 6) {
      int v = 0;
      for (std::size_t k = 0; k < 6; ++k) v = (v << 1) | (padded[i + k] ? 1 : 0);
      out.push_back(encode_armoring(v));
    }
    return {out, fill};
  }

 private:
  std::vector<bool> bits_;
};

class BitReader {
 public:
  explicit BitReader(std::vector<bool> bits) : bits_(std::move(bits)) {}

  std::uint64_t get(std::size_t start, int width) const {
    std::uint64_t v = 0;
    for (int i = 0; i < width; ++i) {
      const std::size_t idx = start + static_cast<std::size_t>(i);
      v = (v << 1) | ((idx < bits_.size() && bits_[idx]) ? 1u : 0u);
    }
    return v;
  }
  std::int64_t get_signed(std::size_t start, int width) const {
    const std::uint64_t v = get(start, width);
    const std::uint64_t sign = std::uint64_t{1} << (width - 1);
    return (v & sign) ? static_cast<std::int64_t>(v) - static_cast<std::int64_t>(sign << 1)
                      : static_cast<std::int64_t>(v);
  }
  std::string get_text(std::size_t start, int chars) const {
    std::string s;
    for (int i = 0; i < chars; ++i) s.push_back(kSixBitText[get(start + 6 * static_cast<std::size_t>(i), 6)]);
    while (!s.empty() && (s.back() == '@' || s.back() == ' ')) s.pop_back();
    return s;
  }
  std::size_t size() const { return bits_.size(); }

 private:
  std::vector<bool> bits_;
};

[[noreturn]] void overflow(const std::string& what) { throw Error(ErrorCode::FieldOverflow, what); }

void check_range(double v, double lo, double hi, double sentinel, const char* name) {
  if (!std::isfinite(v) || ((v < lo || v > hi) && v != sentinel)) overflow(std::string(name) + " out of range");
}

std::string normalized_name(const std::string& name) {
  std::string s = name;
  for (auto& c : s) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  while (!s.empty() && (s.back() == ' ' || s.back() == '@')) s.pop_back();
  return s;
}

void validate(const AisMessage& m) {
  const bool position = m.msg_type >= 1 && m.msg_type <= 3;
  if (!position && m.msg_type != 5) {
    throw Error(ErrorCode::UnsupportedType, "message type " + std::to_string(m.msg_type));
  }
  if (m.mmsi >= 1'000'000'000u) overflow("mmsi exceeds 9 digits");
  if (position) {
    check_range(m.longitude_deg, -180.0, 180.0, kLongitudeNotAvailable, "longitude");
    check_range(m.latitude_deg, -90.0, 90.0, kLatitudeNotAvailable, "latitude");
    check_range(m.sog_knots, 0.0, 102.2, kSpeedNotAvailable, "speed over ground");
    if (!std::isfinite(m.cog_deg) || m.cog_deg < 0.0 || m.cog_deg > kCourseNotAvailable) overflow("course out of range");
    if (std::lround(m.cog_deg * 10.0) > 3600) overflow("course out of range");
  } else {
    if (m.ship_type < 0 || m.ship_type > 255) overflow("ship type exceeds 8 bits");
    if (m.dim_to_bow < 0 || m.dim_to_bow > 511) overflow("dim_to_bow exceeds 9 bits");
    if (m.dim_to_stern < 0 || m.dim_to_stern > 511) overflow("dim_to_stern exceeds 9 bits");
    if (m.dim_to_port < 0 || m.dim_to_port > 63) overflow("dim_to_port exceeds 6 bits");
    if (m.dim_to_starboard < 0 || m.dim_to_starboard > 63) overflow("dim_to_starboard exceeds 6 bits");
    const std::string name = normalized_name(m.name);
    if (name.size() > kNameChars) overflow("name longer than 20 characters");
    for (char c : name) {
      if (kSixBitText.find(c) == std::string_view::npos) overflow("name character outside AIS alphabet");
    }
  }
}

std::int64_t raw_position(double deg) { return std::llround(deg * kPositionScale); }

std::string hex2(unsigned v) {
  char buf[3];
  std::snprintf(buf, sizeof buf, "%02X", v & 0xFFu);
  return buf;
}

}  // namespace

std::string NmeaSentence::body() const {
  std::string b = talker;
  b += ',' + std::to_string(fragment_count) + ',' + std::to_string(fragment_index) + ',';
  if (sequential_id) b += std::to_string(*sequential_id);
  b += ',';
  b += channel;
  b += ',' + armored_payload + ',' + std::to_string(fill_bits);
  return b;
}

std::string NmeaSentence::to_string() const { return "!" + body() + "*" + checksum; }

bool NmeaSentence::checksum_valid() const { return checksum == ais::checksum(body()); }

std::string checksum(std::string_view body) {
  unsigned x = 0;
  for (char c : body) {
    const auto u = static_cast<unsigned char>(c);
    if (u > 0x7F) throw Error(ErrorCode::NonAsciiInput, "checksum body contains non-ASCII byte");
    x ^= u;
  }
  return hex2(x);
}

int decode_armoring(char ch) {
  const int c = static_cast<unsigned char>(ch);
  // Valid symbols: '0'..'W' (48..87) and '`'..'w' (96..119).
  if (c < 48 || c > 119 || (c > 87 && c < 96)) {
    throw Error(ErrorCode::InvalidArmorChar, std::string("invalid armoring character '") + ch + "'");
  }
  int v = c - 48;
  if (v > 40) v -= 8;
  return v;
}

char encode_armoring(int value) {
  if (value < 0 || value > 63) throw Error(ErrorCode::InvalidArgument, "6-bit value out of range");
  return static_cast<char>(value < 40 ? value + 48 : value + 56);
}

NmeaSentence parse_sentence(std::string_view line) {
  while (!line.empty() && (line.back() == '\r' || line.back() == '\n' || line.back() == ' ')) line.remove_suffix(1);
  auto bad = [&](const char* why) -> NmeaSentence {
    throw Error(ErrorCode::MalformedSentence, std::string(why) + ": " + std::string(line));
  };
  if (line.size() < 4 || line.front() != '!') return bad("missing '!'");
  const auto star = line.rfind('*');
  if (star == std::string_view::npos || star + 3 != line.size()) return bad("missing '*hh' checksum");
  const std::string_view body = line.substr(1, star - 1);

  std::vector<std::string_view> fields;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= body.size(); ++i) {
    if (i == body.size() || body[i] == ',') {
      fields.push_back(body.substr(start, i - start));
      start = i + 1;
    }
  }
  if (fields.size() != 7) return bad("expected 7 fields");

  auto to_int = [&](std::string_view s) {
    if (s.empty() || s.size() > 3 || !std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; })) {
      bad("non-numeric field");
    }
    return std::stoi(std::string(s));
  };

  NmeaSentence s;
  s.talker = std::string(fields[0]);
  if (s.talker != "AIVDM" && s.talker != "AIVDO") return bad("unsupported talker");
  s.fragment_count = to_int(fields[1]);
  s.fragment_index = to_int(fields[2]);
  if (s.fragment_count < 1 || s.fragment_index < 1 || s.fragment_index > s.fragment_count) {
    return bad("bad fragment numbering");
  }
  if (!fields[3].empty()) s.sequential_id = to_int(fields[3]);
  if (fields[4].size() > 1) return bad("bad channel");
  s.channel = fields[4].empty() ? 'A' : fields[4][0];
  s.armored_payload = std::string(fields[5]);
  s.fill_bits = to_int(fields[6]);
  if (s.fill_bits < 0 || s.fill_bits > 5) return bad("fill bits outside 0-5");
  s.checksum = std::string(line.substr(star + 1, 2));
  for (auto& c : s.checksum) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return s;
}

AisMessage quantized(const AisMessage& m) {
  AisMessage q = m;
  q.name = normalized_name(m.name);
  if (m.msg_type >= 1 && m.msg_type <= 3) {
    q.longitude_deg = static_cast<double>(raw_position(m.longitude_deg)) / kPositionScale;
    q.latitude_deg = static_cast<double>(raw_position(m.latitude_deg)) / kPositionScale;
    q.sog_knots = static_cast<double>(std::lround(m.sog_knots * 10.0)) / 10.0;
    q.cog_deg = static_cast<double>(std::lround(m.cog_deg * 10.0)) / 10.0;
  }
  return q;
}

std::vector<NmeaSentence> synthesize_spoof(const AisMessage& m, const SynthesisOptions& options) {
  validate(m);
  if (options.max_payload_chars < 1) throw Error(ErrorCode::InvalidArgument, "max_payload_chars must be >= 1");
  BitWriter w;
  w.put(static_cast<std::uint64_t>(m.msg_type), 6);
  w.put(0, 2);  // repeat indicator
  w.put(m.mmsi, 30);
  if (m.msg_type != 5) {
    w.put(15, 4);       // navigation status: not defined
    w.put_signed(-128, 8);  // rate of turn: not available
    w.put(static_cast<std::uint64_t>(std::lround(m.sog_knots * 10.0)), 10);
    w.put(0, 1);  // position accuracy
    w.put_signed(raw_position(m.longitude_deg), 28);
    w.put_signed(raw_position(m.latitude_deg), 27);
    w.put(static_cast<std::uint64_t>(std::lround(m.cog_deg * 10.0)), 12);
    w.put(511, 9);  // true heading: not available
    w.put(60, 6);   // time stamp: not available
    w.put(0, 2);    // manoeuvre indicator
    w.put(0, 3);    // spare
    w.put(0, 1);    // RAIM
    w.put(0, 19);   // radio status
  } else {
    w.put(0, 2);   // AIS version
    w.put(0, 30);  // IMO number
    w.put_text("", 7);
    w.put_text(normalized_name(m.name), kNameChars);
    w.put(static_cast<std::uint64_t>(m.ship_type), 8);
    w.put(static_cast<std::uint64_t>(m.dim_to_bow), 9);
    w.put(static_cast<std::uint64_t>(m.dim_to_stern), 9);
    w.put(static_cast<std::uint64_t>(m.dim_to_port), 6);
    w.put(static_cast<std::uint64_t>(m.dim_to_starboard), 6);
    w.put(1, 4);    // EPFD: GPS
    w.put(0, 4);    // ETA month
    w.put(0, 5);    // ETA day
    w.put(24, 5);   // ETA hour: not available
    w.put(60, 6);   // ETA minute: not available
    w.put(0, 8);    // draught
    w.put_text("", 20);
    w.put(0, 1);  // DTE
    w.put(0, 1);  // spare
  }
  const auto [payload, fill] = w.armor();

  const auto chunk = static_cast<std::size_t>(options.max_payload_chars);
  const int count = static_cast<int>((payload.size() + chunk - 1) / chunk);
  std::vector<NmeaSentence> out;
  for (int i = 0; i < count; ++i) {
    NmeaSentence s;
    s.fragment_count = count;
    s.fragment_index = i + 1;
    if (count > 1) s.sequential_id = options.sequential_id;
    s.channel = options.channel;
    s.armored_payload = payload.substr(static_cast<std::size_t>(i) * chunk, chunk);
    s.fill_bits = (i == count - 1) ? fill : 0;
    s.checksum = checksum(s.body());
    out.push_back(std::move(s));
  }
  return out;
}

AisMessage parse_aivdm(std::span<const NmeaSentence> sentences) {
  if (sentences.empty()) throw Error(ErrorCode::IncompleteFragmentGroup, "no sentences");
  for (const auto& s : sentences) {
    if (!s.checksum_valid()) {
      throw Error(ErrorCode::ChecksumMismatch, "expected " + checksum(s.body()) + ", got " + s.checksum);
    }
  }
  const int count = sentences.front().fragment_count;
  if (static_cast<int>(sentences.size()) != count) {
    throw Error(ErrorCode::IncompleteFragmentGroup, "have " + std::to_string(sentences.size()) + " of " +
                                                        std::to_string(count) + " fragments");
  }
  std::vector<const NmeaSentence*> ordered(static_cast<std::size_t>(count), nullptr);
  for (const auto& s : sentences) {
    if (s.fragment_count != count || s.sequential_id != sentences.front().sequential_id) {
      throw Error(ErrorCode::IncompleteFragmentGroup, "fragments belong to different groups");
    }
    auto& slot = ordered[static_cast<std::size_t>(s.fragment_index - 1)];
    if (slot) throw Error(ErrorCode::IncompleteFragmentGroup, "duplicate fragment index");
    slot = &s;
  }

  std::vector<bool> bits;
  for (std::size_t f = 0; f < ordered.size(); ++f) {
    for (char c : ordered[f]->armored_payload) {
      const int v = decode_armoring(c);
      for (int b = 5; b >= 0; --b) bits.push_back(((v >> b) & 1) != 0);
    }
    if (f + 1 == ordered.size()) {
      const auto fill = static_cast<std::size_t>(ordered[f]->fill_bits);
      if (fill > bits.size()) throw Error(ErrorCode::MalformedSentence, "fill bits exceed payload");
      bits.resize(bits.size() - fill);
    }
  }
  const BitReader r(std::move(bits));
  if (r.size() < 38) throw Error(ErrorCode::MalformedSentence, "payload too short");

  AisMessage m;
  m.msg_type = static_cast<int>(r.get(0, 6));
  m.mmsi = static_cast<std::uint32_t>(r.get(8, 30));
  if (m.msg_type >= 1 && m.msg_type <= 3) {
    if (r.size() < kPositionBits) throw Error(ErrorCode::MalformedSentence, "position report shorter than 168 bits");
    m.sog_knots = static_cast<double>(r.get(50, 10)) / 10.0;
    m.longitude_deg = static_cast<double>(r.get_signed(61, 28)) / kPositionScale;
    m.latitude_deg = static_cast<double>(r.get_signed(89, 27)) / kPositionScale;
    m.cog_deg = static_cast<double>(r.get(116, 12)) / 10.0;
    const bool lon_ok = std::abs(m.longitude_deg) <= 180.0 || m.longitude_deg == kLongitudeNotAvailable;
    const bool lat_ok = std::abs(m.latitude_deg) <= 90.0 || m.latitude_deg == kLatitudeNotAvailable;
    if (!lon_ok || !lat_ok) throw Error(ErrorCode::MalformedSentence, "position outside valid range");
  } else if (m.msg_type == 5) {
    // Some transmitters drop the trailing spare bits.
    if (r.size() < kStaticBits - 4) throw Error(ErrorCode::MalformedSentence, "static report shorter than 420 bits");
    m.name = r.get_text(112, kNameChars);
    m.ship_type = static_cast<int>(r.get(232, 8));
    m.dim_to_bow = static_cast<int>(r.get(240, 9));
    m.dim_to_stern = static_cast<int>(r.get(249, 9));
    m.dim_to_port = static_cast<int>(r.get(258, 6));
    m.dim_to_starboard = static_cast<int>(r.get(264, 6));
  } else {
    throw Error(ErrorCode::UnsupportedType, "message type " + std::to_string(m.msg_type));
  }
  return m;
}

std::vector<AisMessage> decode_stream(std::span<const std::string> lines) {
  std::vector<AisMessage> out;
  std::vector<NmeaSentence> group;
  for (const auto& line : lines) {
    if (line.find_first_not_of(" \r\n\t") == std::string::npos) continue;
    NmeaSentence s = parse_sentence(line);
    if (s.fragment_index == 1) group.clear();
    group.push_back(std::move(s));
    if (group.back().fragment_index == group.back().fragment_count) {
      out.push_back(parse_aivdm(group));
      group.clear();
    }
  }
  if (!group.empty()) throw Error(ErrorCode::IncompleteFragmentGroup, "stream ends inside a fragment group");
  return out;
}

}  // namespace dfcr::ais
