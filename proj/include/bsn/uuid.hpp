#pragma once

#include <string>

namespace bsn {

/// Random (version 4) UUID in canonical lowercase text form.
std::string new_uuid();

/// True for canonical 8-4-4-4-12 hex text.
bool is_uuid(const std::string& text);

}  // namespace bsn
