#include "fqzkit/fastq.hpp"

#include <zlib.h>

#include <array>
#include <cstdio>
#include <cstring>
#include <fstream>

namespace fqzkit {

namespace {

class PlainLineSource final : public LineSource {
public:
    explicit PlainLineSource(const std::string& path) : in_(path, std::ios::binary) {
        if (!in_) throw io_error("cannot open " + path);
    }

    bool next_line(std::string& line) override {
        if (!std::getline(in_, line)) {
            if (in_.bad()) throw io_error("read failure");
            return false;
        }
        offset_ += line.size() + 1;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        return true;
    }

    uint64_t byte_offset() const override { return offset_; }

private:
    std::ifstream in_;
    uint64_t offset_ = 0;
};

class GzipLineSource final : public LineSource {
public:
    explicit GzipLineSource(const std::string& path) : path_(path) {
        file_ = gzopen(path.c_str(), "rb");
        if (!file_) throw io_error("cannot open " + path);
        gzbuffer(file_, 1 << 17);
    }

    ~GzipLineSource() override {
        if (file_) gzclose(file_);
    }

    bool next_line(std::string& line) override {
        line.clear();
        for (;;) {
            if (pos_ == len_ && !fill()) {
                return !line.empty();
            }
            const char* start = buf_.data() + pos_;
            const char* nl = static_cast<const char*>(memchr(start, '\n', len_ - pos_));
            if (nl) {
                line.append(start, nl);
                pos_ = size_t(nl - buf_.data()) + 1;
                if (!line.empty() && line.back() == '\r') line.pop_back();
                return true;
            }
            line.append(start, len_ - pos_);
            pos_ = len_;
        }
    }

    uint64_t byte_offset() const override {
        return uint64_t(gzoffset(file_));
    }

private:
    bool fill() {
        int n = gzread(file_, buf_.data(), unsigned(buf_.size()));
        if (n < 0) {
            int errnum = 0;
            const char* msg = gzerror(file_, &errnum);
            throw parse_error("malformed gzip stream in " + path_ + " at compressed byte " +
                              std::to_string(gzoffset(file_)) + ": " + (msg ? msg : "error"));
        }
        pos_ = 0;
        len_ = size_t(n);
        return len_ > 0;
    }

    std::string path_;
    gzFile file_ = nullptr;
    std::array<char, 1 << 16> buf_{};
    size_t pos_ = 0;
    size_t len_ = 0;
};

} // namespace

std::unique_ptr<LineSource> open_line_source(const std::string& path, bool gzipped) {
    if (gzipped) return std::make_unique<GzipLineSource>(path);
    return std::make_unique<PlainLineSource>(path);
}

FastqReader::FastqReader(const std::string& path, bool gzipped)
    : src_(open_line_source(path, gzipped)), path_(path) {}

std::optional<FastqRecord> FastqReader::next() {
    std::string header;
    if (!src_->next_line(header)) return std::nullopt;

    auto fail = [&](const std::string& what) -> parse_error {
        return parse_error(path_ + ": record " + std::to_string(count_ + 1) + ": " + what);
    };

    if (header.empty() || header[0] != '@') throw fail("expected '@' header line");

    FastqRecord rec;
    size_t sp = header.find(' ');
    if (sp == std::string::npos) {
        rec.name = header.substr(1);
    } else {
        rec.name = header.substr(1, sp - 1);
        rec.comment = header.substr(sp + 1);
    }

    std::string plus;
    if (!src_->next_line(rec.seq)) throw fail("truncated record (missing sequence line)");
    if (!src_->next_line(plus)) throw fail("truncated record (missing '+' line)");
    if (!src_->next_line(rec.qual)) throw fail("truncated record (missing quality line)");

    if (plus.empty() || plus[0] != '+') throw fail("expected '+' separator line");
    if (rec.seq.size() != rec.qual.size())
        throw fail("sequence and quality lengths differ (" + std::to_string(rec.seq.size()) +
                   " vs " + std::to_string(rec.qual.size()) + ")");
    if (rec.seq.empty()) throw fail("empty sequence");

    for (char& c : rec.seq) {
        if (c >= 'a' && c <= 'z') c = char(c - 'a' + 'A');
        switch (c) {
        case 'A': case 'C': case 'G': case 'T': case 'N': break;
        default:
            throw fail(std::string("invalid base '") + c + "'");
        }
    }
    for (char c : rec.qual) {
        if (uint8_t(c) < 0x21 || uint8_t(c) > 0x7E)
            throw fail("quality byte out of range [0x21,0x7E]");
    }

    ++count_;
    text_bytes_ += fastq_text_size(rec);
    return rec;
}

uint64_t fastq_text_size(const FastqRecord& rec) {
    uint64_t header = 1 + rec.name.size() + (rec.comment.empty() ? 0 : 1 + rec.comment.size());
    return header + 1 + rec.seq.size() + 1 + 2 + rec.qual.size() + 1;
}

BatchReader::BatchReader(std::unique_ptr<FastqReader> r1, uint64_t reads_per_chunk)
    : r1_(std::move(r1)), reads_per_chunk_(reads_per_chunk) {}

BatchReader::BatchReader(std::unique_ptr<FastqReader> r1, std::unique_ptr<FastqReader> r2,
                         uint64_t reads_per_chunk)
    : r1_(std::move(r1)), r2_(std::move(r2)), reads_per_chunk_(reads_per_chunk) {}

std::optional<ReadBatch> BatchReader::next_batch() {
    if (done_) return std::nullopt;

    ReadBatch batch;
    batch.batch_index = next_index_;
    batch.paired = r2_ != nullptr;
    batch.records.reserve(size_t(reads_per_chunk_) * (batch.paired ? 2 : 1));

    for (uint64_t i = 0; i < reads_per_chunk_; ++i) {
        auto rec1 = r1_->next();
        if (!batch.paired) {
            if (!rec1) { done_ = true; break; }
            batch.records.push_back(std::move(*rec1));
            continue;
        }
        auto rec2 = r2_->next();
        if (!rec1 && !rec2) { done_ = true; break; }
        if (!rec1 || !rec2) {
            throw parse_error("paired inputs diverge after " +
                              std::to_string(std::min(r1_->records_read(), r2_->records_read())) +
                              " pairs: one stream ended early");
        }
        batch.records.push_back(std::move(*rec1));
        batch.records.push_back(std::move(*rec2));
    }

    if (batch.records.empty()) return std::nullopt;
    ++next_index_;
    return batch;
}

uint64_t BatchReader::text_bytes() const {
    return r1_->text_bytes() + (r2_ ? r2_->text_bytes() : 0);
}

uint64_t BatchReader::records_read() const {
    return r1_->records_read() + (r2_ ? r2_->records_read() : 0);
}

struct FastqWriter::Impl {
    gzFile gz = nullptr;
    FILE* plain = nullptr;
    std::string path;
};

FastqWriter::FastqWriter(const std::string& path, bool gzipped) : impl_(new Impl) {
    impl_->path = path;
    if (gzipped) {
        impl_->gz = gzopen(path.c_str(), "wb");
        if (!impl_->gz) throw io_error("cannot open " + path + " for writing");
        gzbuffer(impl_->gz, 1 << 17);
    } else {
        impl_->plain = std::fopen(path.c_str(), "wb");
        if (!impl_->plain) throw io_error("cannot open " + path + " for writing");
    }
}

FastqWriter::~FastqWriter() {
    try {
        close();
    } catch (...) {
    }
}

void FastqWriter::put(const char* data, size_t len) {
    if (impl_->gz) {
        if (len && gzwrite(impl_->gz, data, unsigned(len)) <= 0)
            throw io_error("write failure on " + impl_->path);
    } else if (impl_->plain) {
        if (std::fwrite(data, 1, len, impl_->plain) != len)
            throw io_error("write failure on " + impl_->path);
    } else {
        throw io_error("writer already closed: " + impl_->path);
    }
}

void FastqWriter::write(const FastqRecord& rec) {
    std::string out;
    out.reserve(fastq_text_size(rec));
    out += '@';
    out += rec.name;
    if (!rec.comment.empty()) {
        out += ' ';
        out += rec.comment;
    }
    out += '\n';
    out += rec.seq;
    out += "\n+\n";
    out += rec.qual;
    out += '\n';
    put(out.data(), out.size());
}

void FastqWriter::write(uint64_t ordinal, const std::string& seq, const std::string& qual) {
    std::string out;
    out.reserve(seq.size() + qual.size() + 32);
    out += '@';
    out += std::to_string(ordinal);
    out += '\n';
    out += seq;
    out += "\n+\n";
    out += qual;
    out += '\n';
    put(out.data(), out.size());
}

void FastqWriter::close() {
    if (impl_->gz) {
        int rc = gzclose(impl_->gz);
        impl_->gz = nullptr;
        if (rc != Z_OK) throw io_error("close failure on " + impl_->path);
    }
    if (impl_->plain) {
        FILE* f = impl_->plain;
        impl_->plain = nullptr;
        if (std::fclose(f) != 0) throw io_error("close failure on " + impl_->path);
    }
}

} // namespace fqzkit
