#pragma once

#include <stdexcept>
#include <string>

namespace illusion {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Malformed RIFF/WAVE structure.
class FormatError : public Error {
public:
    using Error::Error;
};

// Well-formed WAV using an encoding we do not read (non-PCM, non-16-bit).
class UnsupportedFormatError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

class InvalidInput : public Error {
public:
    using Error::Error;
};

// Clip shorter than one analysis window.
class TooShortError : public Error {
public:
    using Error::Error;
};

}  // namespace illusion
