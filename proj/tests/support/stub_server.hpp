#pragma once

// Local HTTP server for exercising the remote adapters.

#include <atomic>
#include <string>
#include <thread>

#include "httplib.h"

class StubServer {
public:
    httplib::Server server;
    std::atomic<int> hits{0};

    void start() {
        port_ = server.bind_to_any_port("127.0.0.1");
        thread_ = std::thread([this] { server.listen_after_bind(); });
        server.wait_until_ready();
    }

    ~StubServer() {
        server.stop();
        if (thread_.joinable()) thread_.join();
    }

    std::string url() const { return "http://127.0.0.1:" + std::to_string(port_); }

private:
    int port_ = 0;
    std::thread thread_;
};
