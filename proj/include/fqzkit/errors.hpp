#ifndef FQZKIT_ERRORS_HPP
#define FQZKIT_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace fqzkit {

// Error taxonomy mirrors the CLI exit codes: usage=1, io=2, corruption=3,
// reference mismatch=4.
class io_error : public std::runtime_error {
public:
    explicit io_error(const std::string& msg) : std::runtime_error(msg) {}
};

// Malformed FASTQ/FASTA or gzip input. Reported as an IO failure (exit 2).
class parse_error : public io_error {
public:
    explicit parse_error(const std::string& msg) : io_error(msg) {}
};

// A structurally invalid archive or index file.
class corruption_error : public std::runtime_error {
public:
    explicit corruption_error(const std::string& msg) : std::runtime_error(msg) {}
};

// Supplied reference does not match the checksum recorded in an archive/index.
class ref_mismatch_error : public std::runtime_error {
public:
    explicit ref_mismatch_error(const std::string& msg) : std::runtime_error(msg) {}
};

} // namespace fqzkit

#endif
