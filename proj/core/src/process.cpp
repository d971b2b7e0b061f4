#include <exmig/errors.hpp>
#include <exmig/process.hpp>

#include <cerrno>
#include <csignal>
#include <cstring>
#include <fcntl.h>
#include <poll.h>
#include <sys/wait.h>
#include <unistd.h>

namespace exmig {

std::string shell_quote(std::string_view text)
{
    std::string out = "'";
    for (char c : text) {
        if (c == '\'')
            out += "'\\''";
        else
            out += c;
    }
    out += '\'';
    return out;
}

ProcessResult run_process(const std::string& command, const std::filesystem::path& cwd,
                          std::chrono::milliseconds timeout, const std::map<std::string, std::string>& env)
{
    using clock = std::chrono::steady_clock;
    const auto start = clock::now();
    const auto deadline = start + timeout;

    int fds[2];
    if (pipe2(fds, O_CLOEXEC) != 0)
        throw EnvironmentError(std::string("pipe: ") + std::strerror(errno));

    const pid_t pid = fork();
    if (pid < 0) {
        close(fds[0]);
        close(fds[1]);
        throw EnvironmentError(std::string("fork: ") + std::strerror(errno));
    }
    if (pid == 0) {
        setpgid(0, 0);
        dup2(fds[1], STDOUT_FILENO);
        dup2(fds[1], STDERR_FILENO);
        int devnull = open("/dev/null", O_RDONLY);
        if (devnull >= 0)
            dup2(devnull, STDIN_FILENO);
        if (!cwd.empty() && chdir(cwd.c_str()) != 0)
            _exit(126);
        for (const auto& [k, v] : env)
            setenv(k.c_str(), v.c_str(), 1);
        execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
        _exit(127);
    }
    setpgid(pid, pid);
    close(fds[1]);

    ProcessResult result;
    char buf[8192];
    bool open_pipe = true;
    while (open_pipe) {
        const auto now = clock::now();
        if (now >= deadline) {
            result.timed_out = true;
            break;
        }
        const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - now).count();
        pollfd p{fds[0], POLLIN, 0};
        const int rc = poll(&p, 1, static_cast<int>(std::min<long long>(left, 200)));
        if (rc < 0) {
            if (errno == EINTR)
                continue;
            break;
        }
        if (rc == 0)
            continue;
        const ssize_t n = read(fds[0], buf, sizeof buf);
        if (n > 0)
            result.output.append(buf, static_cast<std::size_t>(n));
        else if (n == 0 || errno != EINTR)
            open_pipe = false;
    }

    int status = 0;
    if (result.timed_out) {
        kill(-pid, SIGKILL);
        waitpid(pid, &status, 0);
    } else {
        // Output closed; the shell may still be exiting, or a child kept running after
        // closing its descriptors.
        for (;;) {
            const pid_t w = waitpid(pid, &status, WNOHANG);
            if (w == pid)
                break;
            if (w < 0 && errno != EINTR)
                break;
            if (clock::now() >= deadline) {
                result.timed_out = true;
                kill(-pid, SIGKILL);
                waitpid(pid, &status, 0);
                break;
            }
            usleep(2000);
        }
    }
    // Reap stragglers left in the group.
    kill(-pid, SIGKILL);
    close(fds[0]);

    result.duration_s = std::chrono::duration<double>(clock::now() - start).count();
    if (!result.timed_out) {
        if (WIFEXITED(status))
            result.exit_code = WEXITSTATUS(status);
        else
            result.exit_code = -1;
        if (result.exit_code == 127)
            throw EnvironmentError("command not found while running '" + command + "': " + result.output);
    }
    return result;
}

} // namespace exmig
