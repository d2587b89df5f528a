#include "acs/protocol.hpp"

#include <sys/wait.h>
#include <unistd.h>

#include <bit>
#include <cerrno>
#include <cstdio>
#include <cstring>
#include <istream>
#include <ostream>
#include <sstream>
#include <vector>

namespace acs {

namespace wire {

namespace {

void append_double(std::string & line, double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    line += ' ';
    line += buf;
}

void append_f32le(std::string & payload, double v) {
    const auto bits = std::bit_cast<std::uint32_t>(static_cast<float>(v));
    payload.push_back(static_cast<char>(bits & 0xFF));
    payload.push_back(static_cast<char>((bits >> 8) & 0xFF));
    payload.push_back(static_cast<char>((bits >> 16) & 0xFF));
    payload.push_back(static_cast<char>((bits >> 24) & 0xFF));
}

double read_f32le(const char * bytes) {
    std::uint32_t bits = 0;
    bits |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes[0]));
    bits |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes[1])) << 8;
    bits |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes[2])) << 16;
    bits |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes[3])) << 24;
    return static_cast<double>(std::bit_cast<float>(bits));
}

std::vector<TokenId> parse_context(std::istringstream & in) {
    std::vector<TokenId> context;
    long long id = 0;
    while (in >> id) {
        if (id < 0) {
            throw ValidationError("negative token id in request");
        }
        context.push_back(static_cast<TokenId>(id));
    }
    if (!in.eof()) {
        throw ValidationError("unparseable token id in request");
    }
    return context;
}

} // namespace

std::string encode_step_request(std::span<const TokenId> context, bool binary) {
    std::string line = binary ? "stepb" : "step";
    for (const TokenId t : context) {
        line += ' ';
        line += std::to_string(t);
    }
    return line;
}

std::string format_hello_response(const BackendDescriptor & desc) {
    std::string name = desc.name.empty() ? "backend" : desc.name;
    for (char & c : name) {
        if (c == ' ' || c == '\n') {
            c = '_';
        }
    }
    return "ok " + name + " " + std::to_string(desc.vocab_size) + " " +
           std::to_string(desc.hidden_dim);
}

std::string format_step_response_text(const StepOutput & out) {
    std::string line = "ok";
    for (const double p : out.dist.probs) {
        append_double(line, p);
    }
    for (const double v : out.last_representation.values) {
        append_double(line, v);
    }
    return line;
}

std::string format_step_payload_binary(const StepOutput & out) {
    std::string payload;
    payload.reserve(4 * (out.dist.probs.size() + out.last_representation.values.size()));
    for (const double p : out.dist.probs) {
        append_f32le(payload, p);
    }
    for (const double v : out.last_representation.values) {
        append_f32le(payload, v);
    }
    return payload;
}

BackendDescriptor parse_hello_response(const std::string & line) {
    std::istringstream in(line);
    std::string status;
    BackendDescriptor desc;
    if (!(in >> status) || status != "ok" ||
        !(in >> desc.name >> desc.vocab_size >> desc.hidden_dim)) {
        throw ValidationError("bad hello response: " + line);
    }
    if (desc.vocab_size < 2 || desc.hidden_dim < 1) {
        throw ValidationError("hello response with invalid sizes: " + line);
    }
    return desc;
}

StepOutput parse_step_response_text(const std::string & line, std::size_t vocab_size,
                                    std::size_t hidden_dim) {
    std::istringstream in(line);
    std::string status;
    in >> status;
    if (status == "err") {
        std::string message;
        std::getline(in, message);
        throw ValidationError("backend error:" + message);
    }
    if (status != "ok") {
        throw ValidationError("bad step response: " + line.substr(0, 64));
    }
    StepOutput out;
    out.dist.probs.resize(vocab_size);
    out.last_representation.values.resize(hidden_dim);
    for (double & p : out.dist.probs) {
        if (!(in >> p)) {
            throw ValidationError("step response truncated in probabilities");
        }
    }
    for (double & v : out.last_representation.values) {
        if (!(in >> v)) {
            throw ValidationError("step response truncated in representation");
        }
    }
    return out;
}

StepOutput decode_step_payload_binary(std::string_view payload, std::size_t vocab_size,
                                      std::size_t hidden_dim) {
    if (payload.size() != 4 * (vocab_size + hidden_dim)) {
        throw ValidationError("binary step payload has " + std::to_string(payload.size()) +
                              " bytes, expected " + std::to_string(4 * (vocab_size + hidden_dim)));
    }
    StepOutput out;
    out.dist.probs.resize(vocab_size);
    out.last_representation.values.resize(hidden_dim);
    const char * cursor = payload.data();
    for (double & p : out.dist.probs) {
        p = read_f32le(cursor);
        cursor += 4;
    }
    for (double & v : out.last_representation.values) {
        v = read_f32le(cursor);
        cursor += 4;
    }
    return out;
}

bool handle_request_line(const Backend & backend, const std::string & line, std::ostream & out) {
    std::istringstream in(line);
    std::string verb;
    if (!(in >> verb)) {
        return true; // blank line, ignore
    }
    try {
        if (verb == "bye") {
            return false;
        }
        if (verb == "hello") {
            out << format_hello_response(backend.descriptor()) << '\n';
        } else if (verb == "step" || verb == "stepb") {
            const auto context = parse_context(in);
            const auto stepped = backend.step(context);
            if (verb == "step") {
                out << format_step_response_text(stepped) << '\n';
            } else {
                const auto payload = format_step_payload_binary(stepped);
                out << "okb " << payload.size() << '\n';
                out.write(payload.data(), static_cast<std::streamsize>(payload.size()));
            }
        } else {
            out << "err unknown request: " << verb << '\n';
        }
    } catch (const std::exception & e) {
        std::string message = e.what();
        for (char & c : message) {
            if (c == '\n') {
                c = ' ';
            }
        }
        out << "err " << message << '\n';
    }
    out.flush();
    return true;
}

} // namespace wire

void serve_backend(const Backend & backend, std::istream & in, std::ostream & out) {
    std::string line;
    while (std::getline(in, line)) {
        if (!wire::handle_request_line(backend, line, out)) {
            break;
        }
    }
}

namespace {

class LoopbackChannel final : public LineChannel {
public:
    explicit LoopbackChannel(const Backend & backend) : backend_(backend) {}

    void send_line(const std::string & line) override {
        std::ostringstream out;
        wire::handle_request_line(backend_, line, out);
        buffer_ += out.str();
    }

    std::string recv_line() override {
        const auto pos = buffer_.find('\n');
        if (pos == std::string::npos) {
            throw ValidationError("loopback channel has no pending response line");
        }
        std::string line = buffer_.substr(0, pos);
        buffer_.erase(0, pos + 1);
        return line;
    }

    void recv_bytes(void * dst, std::size_t n) override {
        if (buffer_.size() < n) {
            throw ValidationError("loopback channel has too few pending bytes");
        }
        std::memcpy(dst, buffer_.data(), n);
        buffer_.erase(0, n);
    }

private:
    const Backend & backend_;
    std::string buffer_;
};

class PipeChannel final : public LineChannel {
public:
    explicit PipeChannel(const std::string & command) {
        int to_child[2];
        int from_child[2];
        if (pipe(to_child) != 0 || pipe(from_child) != 0) {
            throw ValidationError("pipe() failed: " + std::string(std::strerror(errno)));
        }
        pid_ = fork();
        if (pid_ < 0) {
            throw ValidationError("fork() failed: " + std::string(std::strerror(errno)));
        }
        if (pid_ == 0) {
            dup2(to_child[0], STDIN_FILENO);
            dup2(from_child[1], STDOUT_FILENO);
            close(to_child[0]);
            close(to_child[1]);
            close(from_child[0]);
            close(from_child[1]);
            execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char *>(nullptr));
            _exit(127);
        }
        close(to_child[0]);
        close(from_child[1]);
        write_fd_ = to_child[1];
        read_fd_ = from_child[0];
    }

    ~PipeChannel() override {
        if (write_fd_ >= 0) {
            close(write_fd_);
        }
        if (read_fd_ >= 0) {
            close(read_fd_);
        }
        if (pid_ > 0) {
            int status = 0;
            waitpid(pid_, &status, 0);
        }
    }

    void send_line(const std::string & line) override {
        std::string framed = line;
        framed += '\n';
        std::size_t written = 0;
        while (written < framed.size()) {
            const ssize_t n = write(write_fd_, framed.data() + written, framed.size() - written);
            if (n < 0) {
                if (errno == EINTR) {
                    continue;
                }
                throw ValidationError("write to backend process failed: " +
                                      std::string(std::strerror(errno)));
            }
            written += static_cast<std::size_t>(n);
        }
    }

    std::string recv_line() override {
        std::string line;
        for (;;) {
            const auto pos = buffer_.find('\n');
            if (pos != std::string::npos) {
                line = buffer_.substr(0, pos);
                buffer_.erase(0, pos + 1);
                return line;
            }
            fill();
        }
    }

    void recv_bytes(void * dst, std::size_t n) override {
        while (buffer_.size() < n) {
            fill();
        }
        std::memcpy(dst, buffer_.data(), n);
        buffer_.erase(0, n);
    }

private:
    void fill() {
        char chunk[4096];
        const ssize_t n = read(read_fd_, chunk, sizeof(chunk));
        if (n < 0) {
            if (errno == EINTR) {
                return;
            }
            throw ValidationError("read from backend process failed: " +
                                  std::string(std::strerror(errno)));
        }
        if (n == 0) {
            throw ValidationError("backend process closed the connection");
        }
        buffer_.append(chunk, static_cast<std::size_t>(n));
    }

    pid_t pid_ = -1;
    int write_fd_ = -1;
    int read_fd_ = -1;
    std::string buffer_;
};

} // namespace

std::unique_ptr<LineChannel> make_loopback_channel(const Backend & backend) {
    return std::make_unique<LoopbackChannel>(backend);
}

std::unique_ptr<LineChannel> make_pipe_channel(const std::string & command) {
    return std::make_unique<PipeChannel>(command);
}

StreamBackend::StreamBackend(std::unique_ptr<LineChannel> channel, bool binary)
    : channel_(std::move(channel)), binary_(binary) {
    channel_->send_line("hello");
    desc_ = wire::parse_hello_response(channel_->recv_line());
}

StepOutput StreamBackend::step(std::span<const TokenId> context) const {
    check_context(context);
    channel_->send_line(wire::encode_step_request(context, binary_));
    const std::string head = channel_->recv_line();
    if (!binary_) {
        return wire::parse_step_response_text(head, desc_.vocab_size, desc_.hidden_dim);
    }
    std::istringstream in(head);
    std::string status;
    std::size_t nbytes = 0;
    if (!(in >> status)) {
        throw ValidationError("empty binary step response");
    }
    if (status == "err") {
        std::string message;
        std::getline(in, message);
        throw ValidationError("backend error:" + message);
    }
    if (status != "okb" || !(in >> nbytes)) {
        throw ValidationError("bad binary step response: " + head.substr(0, 64));
    }
    std::string payload(nbytes, '\0');
    channel_->recv_bytes(payload.data(), nbytes);
    return wire::decode_step_payload_binary(payload, desc_.vocab_size, desc_.hidden_dim);
}

} // namespace acs
