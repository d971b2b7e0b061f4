#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace exmig {

/// Expected assertion identity plus behavioral markers.
struct AssertionSpec {
    std::string test_class;
    std::string test_method;
    std::string message;              // compared as a template (digits and volatile parts stripped)
    std::vector<std::string> markers; // regexes expected, in order, in the run log

    std::string test_name() const { return test_class + "." + test_method; }

    friend bool operator==(const AssertionSpec&, const AssertionSpec&) = default;
};

/// The exploit-owned files. Paths are relative to the exploit root.
struct Exploit {
    std::map<std::string, std::string> files;
    std::string entry;
    AssertionSpec assertion;

    bool owns(const std::string& path) const { return files.contains(path); }
    const std::string& entry_source() const;

    /// Read every regular file below `root` (or just `only`, when given).
    static Exploit load(const std::filesystem::path& root, const std::vector<std::string>& only = {});
    void write_to(const std::filesystem::path& root) const;

    friend bool operator==(const Exploit&, const Exploit&) = default;
};

} // namespace exmig
