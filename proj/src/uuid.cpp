#include "bsn/uuid.hpp"

#include <mutex>

#include <boost/uuid/random_generator.hpp>
#include <boost/uuid/string_generator.hpp>
#include <boost/uuid/uuid_io.hpp>

namespace bsn {

std::string new_uuid() {
    static std::mutex mu;
    static boost::uuids::random_generator gen;
    std::lock_guard<std::mutex> lock(mu);
    return boost::uuids::to_string(gen());
}

bool is_uuid(const std::string& text) {
    if (text.size() != 36) {
        return false;
    }
    try {
        return boost::uuids::to_string(boost::uuids::string_generator()(text)) == text;
    } catch (const std::runtime_error&) {
        return false;
    }
}

}  // namespace bsn
