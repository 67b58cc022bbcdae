#pragma once

#include <stdexcept>
#include <string>

namespace cloudheight {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Argument outside the domain of a special function or kernel.
class DomainError : public Error {
public:
    using Error::Error;
};

// Degenerate design, flat signal or numerically singular system.
class DegenerateError : public Error {
public:
    using Error::Error;
};

// A (shifted) extraction window does not fit inside the raster.
class OutOfRasterError : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

}  // namespace cloudheight
