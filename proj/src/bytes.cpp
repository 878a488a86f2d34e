#include "bsn/bytes.hpp"

#include <iterator>
#include <stdexcept>

#include <boost/algorithm/hex.hpp>

namespace bsn {

std::string to_hex(ByteView bytes) {
    std::string out;
    out.reserve(bytes.size() * 2);
    boost::algorithm::hex(bytes.begin(), bytes.end(), std::back_inserter(out));
    return out;
}

Bytes from_hex(std::string_view text) {
    std::string compact;
    compact.reserve(text.size());
    for (char c : text) {
        if (c != ' ' && c != '\t' && c != '\r' && c != '\n') {
            compact.push_back(c);
        }
    }
    Bytes out;
    try {
        boost::algorithm::unhex(compact.begin(), compact.end(), std::back_inserter(out));
    } catch (const boost::algorithm::hex_decode_error&) {
        throw std::invalid_argument("malformed hex string");
    }
    return out;
}

}  // namespace bsn
