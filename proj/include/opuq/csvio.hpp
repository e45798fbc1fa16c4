#pragma once

#include <fstream>
#include <initializer_list>
#include <string>
#include <vector>

namespace opuq {

/// CSV writer that round-trips doubles exactly (%.17g) so artifact files can
/// be compared byte-for-byte across reruns.
class CsvWriter {
public:
    CsvWriter(const std::string& path, const std::vector<std::string>& header);

    void row(const std::vector<std::string>& cells);
    void close();

    static std::string num(double v);
    static std::string num(std::size_t v);

private:
    std::ofstream out_;
    std::string path_;
    std::size_t width_;
};

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    std::size_t col(const std::string& name) const;
    double num(std::size_t row, const std::string& name) const;
};

CsvTable read_csv(const std::string& path);

}  // namespace opuq
