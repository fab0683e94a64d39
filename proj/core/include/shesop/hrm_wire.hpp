#pragma once

// Codec for the Bluetooth GATT Heart Rate Measurement characteristic (0x2A37).
//
// Payload layout, little-endian:
//   [0]      flags
//              bit 0    heart-rate value format (0 = uint8, 1 = uint16)
//              bits 1-2 sensor contact status (bit 2 = supported, bit 1 = detected)
//              bit 3    energy expended present
//              bit 4    RR intervals present
//              bits 5-7 reserved
//   [1..2]   heart rate, 1 or 2 octets
//   [..+2]   energy expended (kJ), only when bit 3 is set
//   [..]     RR intervals, 2 octets each in 1/1024 s, consume the rest

#include <atomic>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "shesop/error.hpp"

namespace shesop::wire {

/// One default-MTU notification (ATT_MTU 23).
inline constexpr std::size_t kMaxNotificationOctets = 23;

enum class SensorContact : std::uint8_t {
  not_supported,
  supported_no_contact,
  supported_contact,
};

struct HrmFlags {
  bool hr_16bit = false;
  SensorContact sensor_contact = SensorContact::not_supported;
  bool energy_present = false;
  bool rr_present = false;
  std::uint8_t reserved = 0;  // bits 5-7, stored right-aligned (0..7)

  std::uint8_t to_byte() const noexcept;
  static HrmFlags from_byte(std::uint8_t byte) noexcept;

  friend bool operator==(const HrmFlags&, const HrmFlags&) = default;
};

struct HrmPacket {
  HrmFlags flags;
  std::uint16_t heart_rate = 0;
  std::optional<std::uint16_t> energy_expended;
  std::vector<std::uint16_t> rr_raw;  // oldest first

  /// Size of the encoded payload in octets.
  std::size_t encoded_size() const noexcept;

  friend bool operator==(const HrmPacket&, const HrmPacket&) = default;
};

/// Non-throwing decode outcome. Exactly one of `packet` / `error` is set.
struct DecodeResult {
  std::optional<HrmPacket> packet;
  std::optional<ErrorCode> error;
  std::size_t error_offset = 0;

  explicit operator bool() const noexcept { return packet.has_value(); }
};

DecodeResult try_decode_packet(std::span<const std::uint8_t> bytes) noexcept;

/// Throws Error{Truncated | TrailingBytes}.
HrmPacket decode_packet(std::span<const std::uint8_t> bytes);

/// Throws Error{InvariantViolation} when the energy/RR flags disagree with the
/// payload fields. A heart rate above 255 forces the 16-bit value format.
std::vector<std::uint8_t> encode_packet(const HrmPacket& packet);

/// Builds a packet with flags derived from the content (minimal HR format).
HrmPacket make_packet(std::uint16_t heart_rate, std::vector<std::uint16_t> rr_raw,
                      std::optional<std::uint16_t> energy = std::nullopt,
                      SensorContact contact = SensorContact::supported_contact);

constexpr double rr_raw_to_ms(std::uint16_t raw) noexcept {
  return static_cast<double>(raw) * 1000.0 / 1024.0;
}

/// Nearest 1/1024-s count for a millisecond interval, saturating at 0 and 65535.
std::uint16_t rr_ms_to_raw(double rr_ms) noexcept;

struct WireDiagnostics {
  std::atomic<std::uint64_t> oversize_packets{0};
};

/// Process-wide counters. Decoding stays pure apart from these relaxed increments.
WireDiagnostics& diagnostics() noexcept;

}  // namespace shesop::wire
