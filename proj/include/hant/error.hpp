#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace hant {

// Every failure raised by the library carries a short machine-readable code
// ("unknown-node", "degenerate-route", ...) next to the human message.
class Error : public std::runtime_error {
public:
    Error(std::string code, const std::string& message)
        : std::runtime_error(code + ": " + message), code_(std::move(code)) {}

    const std::string& code() const noexcept { return code_; }

private:
    std::string code_;
};

} // namespace hant
