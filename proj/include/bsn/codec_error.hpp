#pragma once

#include <stdexcept>
#include <string>

namespace bsn {

/// Outcome of a frame decode. Each rejection reason is distinct so framers
/// can account for them separately.
enum class DecodeStatus {
    ok,
    bad_frame,  // marker, id or length mismatch
    bad_crc,
    bad_field,  // CRC-valid frame carrying an out-of-range field
};

const char* to_string(DecodeStatus s);

class CodecError : public std::runtime_error {
public:
    enum class Kind { invalid_field, bad_frame, bad_crc, bad_field };

    CodecError(Kind kind, const std::string& what)
        : std::runtime_error(what), kind_(kind) {}

    Kind kind() const noexcept { return kind_; }

private:
    Kind kind_;
};

}  // namespace bsn
