#include <exmig/errors.hpp>
#include <exmig/exploit.hpp>

#include <fstream>
#include <sstream>

namespace exmig {

const std::string& Exploit::entry_source() const
{
    static const std::string empty;
    auto it = files.find(entry);
    return it == files.end() ? empty : it->second;
}

Exploit Exploit::load(const std::filesystem::path& root, const std::vector<std::string>& only)
{
    namespace fs = std::filesystem;
    if (!fs::is_directory(root))
        throw ConfigError("exploit root is not a directory: " + root.string());
    auto read = [](const fs::path& p) {
        std::ifstream in(p, std::ios::binary);
        if (!in)
            throw ConfigError("cannot read exploit file " + p.string());
        std::ostringstream ss;
        ss << in.rdbuf();
        return ss.str();
    };
    Exploit e;
    if (!only.empty()) {
        for (const auto& rel : only)
            e.files.emplace(rel, read(root / rel));
        return e;
    }
    for (const auto& entry : fs::recursive_directory_iterator(root)) {
        if (!entry.is_regular_file())
            continue;
        auto rel = fs::relative(entry.path(), root).generic_string();
        if (rel.starts_with("target/") || rel.starts_with("build/"))
            continue;
        e.files.emplace(rel, read(entry.path()));
    }
    return e;
}

void Exploit::write_to(const std::filesystem::path& root) const
{
    namespace fs = std::filesystem;
    for (const auto& [rel, text] : files) {
        const auto path = root / rel;
        fs::create_directories(path.parent_path());
        std::ofstream out(path, std::ios::binary | std::ios::trunc);
        if (!out)
            throw EnvironmentError("cannot write " + path.string());
        out << text;
    }
}

} // namespace exmig
