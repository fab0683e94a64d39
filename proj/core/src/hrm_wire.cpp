#include "shesop/hrm_wire.hpp"

#include <cmath>
#include <string>

namespace shesop::wire {
namespace {

constexpr std::uint8_t kHr16Bit = 0x01;
constexpr std::uint8_t kContactDetected = 0x02;
constexpr std::uint8_t kContactSupported = 0x04;
constexpr std::uint8_t kEnergyPresent = 0x08;
constexpr std::uint8_t kRrPresent = 0x10;
constexpr int kReservedShift = 5;

std::uint16_t read_u16(std::span<const std::uint8_t> bytes, std::size_t at) noexcept {
  return static_cast<std::uint16_t>(bytes[at] | (bytes[at + 1] << 8));
}

void write_u16(std::vector<std::uint8_t>& out, std::uint16_t value) {
  out.push_back(static_cast<std::uint8_t>(value & 0xFF));
  out.push_back(static_cast<std::uint8_t>(value >> 8));
}

DecodeResult fail(ErrorCode code, std::size_t offset) noexcept {
  DecodeResult r;
  r.error = code;
  r.error_offset = offset;
  return r;
}

}  // namespace

std::uint8_t HrmFlags::to_byte() const noexcept {
  std::uint8_t b = 0;
  if (hr_16bit) b |= kHr16Bit;
  switch (sensor_contact) {
    case SensorContact::not_supported: break;
    case SensorContact::supported_no_contact: b |= kContactSupported; break;
    case SensorContact::supported_contact: b |= kContactSupported | kContactDetected; break;
  }
  if (energy_present) b |= kEnergyPresent;
  if (rr_present) b |= kRrPresent;
  b |= static_cast<std::uint8_t>((reserved & 0x07) << kReservedShift);
  return b;
}

HrmFlags HrmFlags::from_byte(std::uint8_t byte) noexcept {
  HrmFlags f;
  f.hr_16bit = (byte & kHr16Bit) != 0;
  if ((byte & kContactSupported) == 0) {
    // 0b00 and the reserved 0b01 both mean "not supported".
    f.sensor_contact = SensorContact::not_supported;
  } else {
    f.sensor_contact = (byte & kContactDetected) ? SensorContact::supported_contact
                                                 : SensorContact::supported_no_contact;
  }
  f.energy_present = (byte & kEnergyPresent) != 0;
  f.rr_present = (byte & kRrPresent) != 0;
  f.reserved = static_cast<std::uint8_t>(byte >> kReservedShift);
  return f;
}

std::size_t HrmPacket::encoded_size() const noexcept {
  const bool wide = flags.hr_16bit || heart_rate > 0xFF;
  return 1 + (wide ? 2 : 1) + (energy_expended ? 2 : 0) + 2 * rr_raw.size();
}

DecodeResult try_decode_packet(std::span<const std::uint8_t> bytes) noexcept {
  if (bytes.empty()) return fail(ErrorCode::Truncated, 0);
  if (bytes.size() > kMaxNotificationOctets) {
    diagnostics().oversize_packets.fetch_add(1, std::memory_order_relaxed);
  }

  HrmPacket p;
  p.flags = HrmFlags::from_byte(bytes[0]);
  std::size_t at = 1;

  if (p.flags.hr_16bit) {
    if (bytes.size() < at + 2) return fail(ErrorCode::Truncated, at);
    p.heart_rate = read_u16(bytes, at);
    at += 2;
  } else {
    if (bytes.size() < at + 1) return fail(ErrorCode::Truncated, at);
    p.heart_rate = bytes[at];
    at += 1;
  }

  if (p.flags.energy_present) {
    if (bytes.size() < at + 2) return fail(ErrorCode::Truncated, at);
    p.energy_expended = read_u16(bytes, at);
    at += 2;
  }

  if (p.flags.rr_present) {
    const std::size_t rest = bytes.size() - at;
    if (rest < 2) return fail(ErrorCode::Truncated, at);
    if (rest % 2 != 0) return fail(ErrorCode::TrailingBytes, bytes.size() - 1);
    p.rr_raw.reserve(rest / 2);
    for (; at < bytes.size(); at += 2) p.rr_raw.push_back(read_u16(bytes, at));
  } else if (at != bytes.size()) {
    return fail(ErrorCode::TrailingBytes, at);
  }

  DecodeResult r;
  r.packet = std::move(p);
  return r;
}

HrmPacket decode_packet(std::span<const std::uint8_t> bytes) {
  auto r = try_decode_packet(bytes);
  if (!r) {
    throw Error(*r.error, "at octet " + std::to_string(r.error_offset) + " of " +
                              std::to_string(bytes.size()));
  }
  return std::move(*r.packet);
}

std::vector<std::uint8_t> encode_packet(const HrmPacket& packet) {
  if (packet.flags.energy_present != packet.energy_expended.has_value()) {
    throw Error(ErrorCode::InvariantViolation, "energy flag disagrees with energy field");
  }
  if (packet.flags.rr_present != !packet.rr_raw.empty()) {
    throw Error(ErrorCode::InvariantViolation, "rr flag disagrees with rr list");
  }

  HrmFlags flags = packet.flags;
  if (packet.heart_rate > 0xFF) flags.hr_16bit = true;

  std::vector<std::uint8_t> out;
  out.reserve(packet.encoded_size());
  out.push_back(flags.to_byte());
  if (flags.hr_16bit) {
    write_u16(out, packet.heart_rate);
  } else {
    out.push_back(static_cast<std::uint8_t>(packet.heart_rate));
  }
  if (packet.energy_expended) write_u16(out, *packet.energy_expended);
  for (auto rr : packet.rr_raw) write_u16(out, rr);
  return out;
}

HrmPacket make_packet(std::uint16_t heart_rate, std::vector<std::uint16_t> rr_raw,
                      std::optional<std::uint16_t> energy, SensorContact contact) {
  HrmPacket p;
  p.heart_rate = heart_rate;
  p.flags.hr_16bit = heart_rate > 0xFF;
  p.flags.sensor_contact = contact;
  p.flags.energy_present = energy.has_value();
  p.flags.rr_present = !rr_raw.empty();
  p.energy_expended = energy;
  p.rr_raw = std::move(rr_raw);
  return p;
}

std::uint16_t rr_ms_to_raw(double rr_ms) noexcept {
  const double raw = std::round(rr_ms * 1024.0 / 1000.0);
  if (!(raw > 0.0)) return 0;
  if (raw >= 65535.0) return 65535;
  return static_cast<std::uint16_t>(raw);
}

WireDiagnostics& diagnostics() noexcept {
  static WireDiagnostics d;
  return d;
}

}  // namespace shesop::wire
