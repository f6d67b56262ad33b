#pragma once
#include <sstream>
#include <stdexcept>
#include <string>

namespace mpukit::err {

/*!
 * Exception taxonomy.  The CLI maps these onto its exit-code partition:
 *
 *   parse_error        -> 2   (bad command line, bad circuit/tensor file)
 *   cap_error          -> 3   (dense/scan memory cap exceeded)
 *   convergence_error  -> 4   (eigen/reduction/stabilization did not settle)
 *   assertion_error    -> 5   (violated precondition or internal check)
 *
 * Library code throws; it never exits or prints.
 */
struct error : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct parse_error : error {
    using error::error;
};
struct cap_error : error {
    using error::error;
};
struct convergence_error : error {
    using error::error;
};
struct assertion_error : error {
    using error::error;
};

/*! Build an error message from stream-formattable pieces. */
template<typename... Args>
std::string msg(const Args &...args) {
    std::ostringstream os;
    (os << ... << args);
    return os.str();
}

} // namespace mpukit::err
