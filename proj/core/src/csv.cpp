#include "sgest/csv.hpp"

#include "sgest/errors.hpp"

#include <charconv>
#include <cmath>
#include <fstream>

namespace sgest {

std::string format_double(double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

CsvWriter::CsvWriter(const std::vector<std::string>& columns) : columns_(columns.size()) {
    for (std::size_t i = 0; i < columns.size(); ++i) {
        if (i) buffer_ += ',';
        buffer_ += columns[i];
    }
    buffer_ += '\n';
    in_row_ = columns_;
}

void CsvWriter::begin_row() {
    if (in_row_ != columns_)
        throw IoError("csv: previous row incomplete");
    in_row_ = 0;
}

void CsvWriter::field(double v) { field(format_double(v)); }

void CsvWriter::field(const std::string& v) {
    if (in_row_ >= columns_) throw IoError("csv: too many fields in row");
    if (in_row_) buffer_ += ',';
    buffer_ += v;
    if (++in_row_ == columns_) buffer_ += '\n';
}

void write_file(const std::filesystem::path& path, const std::string& content) {
    if (path.has_parent_path()) {
        std::error_code ec;
        std::filesystem::create_directories(path.parent_path(), ec);
        if (ec) throw IoError("cannot create directory " + path.parent_path().string());
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw IoError("write failed for " + path.string());
}

} // namespace sgest
