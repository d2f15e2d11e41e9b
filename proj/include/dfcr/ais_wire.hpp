#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace dfcr::ais {

/// One !AIVDM sentence, split into its comma-separated fields.
struct NmeaSentence {
  std::string talker = "AIVDM";
  int fragment_count = 1;
  int fragment_index = 1;
  std::optional<int> sequential_id;
  char channel = 'A';
  std::string armored_payload;
  int fill_bits = 0;
  std::string checksum;  // two uppercase hex digits as received or computed

  /// Everything between '!' and '*'.
  std::string body() const;
  /// "!<body>*<checksum>" without line terminator.
  std::string to_string() const;
  bool checksum_valid() const;
};

/// XOR fold of all bytes, as two uppercase hex digits. Throws NonAsciiInput.
std::string checksum(std::string_view body);

/// 6-bit payload armoring: v = c - 48, minus a further 8 when v > 40.
int decode_armoring(char ch);
char encode_armoring(int value);

/// Splits a line ("!AIVDM,...*hh", optional trailing CR/LF) into fields.
/// The checksum is kept as received; use checksum_valid() or parse_aivdm to
/// verify it. Throws MalformedSentence.
NmeaSentence parse_sentence(std::string_view line);

inline constexpr double kLongitudeNotAvailable = 181.0;
inline constexpr double kLatitudeNotAvailable = 91.0;
inline constexpr double kSpeedNotAvailable = 102.3;
inline constexpr double kCourseNotAvailable = 360.0;

/// Decoded AIS message. Position fields are meaningful for types 1/2/3,
/// static fields for type 5.
struct AisMessage {
  int msg_type = 1;
  std::uint32_t mmsi = 0;

  double longitude_deg = kLongitudeNotAvailable;
  double latitude_deg = kLatitudeNotAvailable;
  double sog_knots = kSpeedNotAvailable;
  double cog_deg = kCourseNotAvailable;

  int ship_type = 0;
  int dim_to_bow = 0;
  int dim_to_stern = 0;
  int dim_to_port = 0;
  int dim_to_starboard = 0;
  std::string name;

  int reported_length() const { return dim_to_bow + dim_to_stern; }
  int reported_width() const { return dim_to_port + dim_to_starboard; }

  bool operator==(const AisMessage&) const = default;
};

/// Rounds every field to its wire resolution: position to 1/10000 arc-minute,
/// speed and course to 0.1, name upper-cased with trailing blanks removed.
AisMessage quantized(const AisMessage& msg);

struct SynthesisOptions {
  char channel = 'A';
  int sequential_id = 0;  // used only for multi-fragment groups
  int max_payload_chars = 60;
};

/// Encodes a type 1/2/3/5 message as a checksum-correct fragment group.
/// Throws UnsupportedType or FieldOverflow.
std::vector<NmeaSentence> synthesize_spoof(const AisMessage& msg, const SynthesisOptions& options = {});

/// Reassembles one complete fragment group and decodes it. Throws
/// ChecksumMismatch, IncompleteFragmentGroup, UnsupportedType, or
/// MalformedSentence.
AisMessage parse_aivdm(std::span<const NmeaSentence> sentences);

/// Decodes a newline-delimited sentence stream, grouping consecutive
/// fragments. Lines that are blank are skipped.
std::vector<AisMessage> decode_stream(std::span<const std::string> lines);

}  // namespace dfcr::ais
