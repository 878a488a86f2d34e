#pragma once

// Test-only oracles and generators. Nothing here calls into the code paths
// it is used to check.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "bsn/hxm.hpp"
#include "bsn/shimmer.hpp"

namespace bsn::testing {

// Bit-at-a-time reflected CRC-8, polynomial 0x8C, init 0.
inline std::uint8_t crc8_bitwise(std::span<const std::uint8_t> data) {
    std::uint8_t crc = 0;
    for (std::uint8_t byte : data) {
        for (int i = 0; i < 8; ++i) {
            const bool mix = ((crc ^ (byte >> i)) & 1u) != 0;
            crc >>= 1;
            if (mix) {
                crc ^= 0x8C;
            }
        }
    }
    return crc;
}

// Bit-at-a-time CRC-16/CCITT-FALSE, MSB first.
inline std::uint16_t crc16_bitwise(std::span<const std::uint8_t> data) {
    std::uint16_t crc = 0xFFFF;
    for (std::uint8_t byte : data) {
        for (int i = 7; i >= 0; --i) {
            const bool bit = ((byte >> i) & 1u) != 0;
            const bool top = (crc & 0x8000u) != 0;
            crc = static_cast<std::uint16_t>(crc << 1);
            if (top != bit) {
                crc ^= 0x1021;
            }
        }
    }
    return crc;
}

inline HxmMessage random_hxm(std::mt19937_64& rng) {
    auto u = [&](std::uint64_t hi) { return std::uniform_int_distribution<std::uint64_t>(0, hi)(rng); };
    HxmMessage m;
    m.firmware_id = static_cast<std::uint16_t>(u(0xFFFF));
    m.firmware_version = static_cast<std::uint16_t>(u(0xFFFF));
    m.hardware_id = static_cast<std::uint16_t>(u(0xFFFF));
    m.hardware_version = static_cast<std::uint16_t>(u(0xFFFF));
    m.battery_charge = static_cast<std::uint8_t>(u(100));
    // Valid heart rate: 0 or 30..240.
    const auto hr = u(211);
    m.heart_rate = hr == 211 ? 0 : static_cast<std::uint8_t>(30 + hr);
    m.heart_beat_number = static_cast<std::uint8_t>(u(255));
    for (auto& ts : m.beat_timestamps) {
        ts = static_cast<std::uint16_t>(u(0xFFFF));
    }
    m.distance_raw = static_cast<std::uint16_t>(u(0xFFFF));
    m.speed_raw = static_cast<std::uint16_t>(u(4095));
    m.strides = static_cast<std::uint8_t>(u(255));
    return m;
}

inline ShimmerPacket random_shimmer(std::mt19937_64& rng) {
    auto u = [&](std::uint64_t hi) { return std::uniform_int_distribution<std::uint64_t>(0, hi)(rng); };
    ShimmerPacket p;
    p.sensor_id = static_cast<std::uint8_t>(u(255));
    p.data_type = static_cast<std::uint8_t>(u(255));
    p.sequence = static_cast<std::uint8_t>(u(255));
    p.timestamp_ms = static_cast<std::uint16_t>(u(0xFFFF));
    p.emg_len = static_cast<std::uint8_t>(u(2));
    p.emg_raw = static_cast<std::uint16_t>(u(4095));
    p.battery_mv = static_cast<std::uint16_t>(u(3000));
    return p;
}

inline std::filesystem::path fixture(const std::string& name) {
    return std::filesystem::path(BSN_FIXTURE_DIR) / name;
}

// Non-comment, non-blank lines of a fixture file.
inline std::vector<std::string> fixture_lines(const std::string& name) {
    std::ifstream in(fixture(name));
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line[0] != '#') {
            lines.push_back(line);
        }
    }
    return lines;
}

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        std::random_device rd;
        path_ = std::filesystem::temp_directory_path() /
                ("bsn-" + tag + "-" + std::to_string(rd()) + std::to_string(rd()));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
};

}  // namespace bsn::testing
