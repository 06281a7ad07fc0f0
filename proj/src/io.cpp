#include "io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace rblab {

std::string format_g17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

namespace {

void dump_value(const nlohmann::json& j, std::string& out, int indent, int depth) {
    const std::string pad(static_cast<std::size_t>(indent * depth), ' ');
    const std::string pad_in(static_cast<std::size_t>(indent * (depth + 1)), ' ');
    switch (j.type()) {
        case nlohmann::json::value_t::object: {
            if (j.empty()) {
                out += "{}";
                return;
            }
            out += "{\n";
            bool first = true;
            for (auto it = j.begin(); it != j.end(); ++it) {
                if (!first) out += ",\n";
                first = false;
                out += pad_in;
                out += nlohmann::json(it.key()).dump();
                out += ": ";
                dump_value(it.value(), out, indent, depth + 1);
            }
            out += "\n" + pad + "}";
            return;
        }
        case nlohmann::json::value_t::array: {
            if (j.empty()) {
                out += "[]";
                return;
            }
            out += "[\n";
            bool first = true;
            for (const auto& el : j) {
                if (!first) out += ",\n";
                first = false;
                out += pad_in;
                dump_value(el, out, indent, depth + 1);
            }
            out += "\n" + pad + "]";
            return;
        }
        case nlohmann::json::value_t::number_float:
            out += format_g17(j.get<double>());
            return;
        default:
            out += j.dump();
            return;
    }
}

} // namespace

std::string dump_json_g17(const nlohmann::json& j, int indent) {
    std::string out;
    dump_value(j, out, indent, 0);
    out += "\n";
    return out;
}

void write_text_file(const std::string& file_path, const std::string& content) {
    std::ofstream f(file_path, std::ios::binary | std::ios::trunc);
    require(f.good(), ErrorCode::io_error, "cannot open for writing: " + file_path);
    f.write(content.data(), static_cast<std::streamsize>(content.size()));
    f.flush();
    require(f.good(), ErrorCode::io_error, "write failed: " + file_path);
}

std::string read_text_file(const std::string& file_path) {
    std::ifstream f(file_path, std::ios::binary);
    require(f.good(), ErrorCode::io_error, "cannot open for reading: " + file_path);
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

void write_path_csv(const SamplePath& path, const std::string& file_path) {
    path.validate();
    std::string out = "t,value\n";
    for (std::int64_t i = 0; i <= path.n_steps; ++i) {
        out += format_g17(path.time_at(i));
        out += ',';
        out += format_g17(path.values[static_cast<std::size_t>(i)]);
        out += '\n';
    }
    write_text_file(file_path, out);
}

SamplePath read_path_csv(const std::string& file_path) {
    std::ifstream f(file_path);
    require(f.good(), ErrorCode::io_error, "cannot open for reading: " + file_path);
    std::string line;
    require(static_cast<bool>(std::getline(f, line)), ErrorCode::io_error,
            "empty CSV: " + file_path);
    // Tolerate a UTF-8 BOM and trailing CR.
    if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    require(line == "t,value", ErrorCode::io_error,
            "expected header 't,value' in " + file_path);

    std::vector<double> values;
    std::size_t line_no = 1;
    while (std::getline(f, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        auto comma = line.find(',');
        require(comma != std::string::npos, ErrorCode::io_error,
                file_path + ": missing comma on line " + std::to_string(line_no));
        try {
            values.push_back(std::stod(line.substr(comma + 1)));
        } catch (const std::exception&) {
            fail(ErrorCode::io_error,
                 file_path + ": bad value on line " + std::to_string(line_no));
        }
    }
    require(values.size() >= 2, ErrorCode::io_error,
            file_path + ": need at least 2 grid points");
    const std::int64_t n = static_cast<std::int64_t>(values.size()) - 1;
    return SamplePath(n, std::move(values));
}

} // namespace rblab
