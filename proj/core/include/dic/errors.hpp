#pragma once

#include <sstream>
#include <stdexcept>
#include <string>

namespace dic {

//! Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

//! Input violates a documented invariant (bad curve, bad law, bad schema...).
class ValidationError : public Error {
public:
    using Error::Error;
};

//! The systemic scaling b_j(t) cannot reproduce the target survival.
class RootNotBracketed : public Error {
public:
    using Error::Error;
};

//! ETL targets violate capital-structure or term-structure monotonicity.
class InfeasibleTargets : public Error {
public:
    using Error::Error;
};

//! A model component is missing for the requested issuer, factor or date.
class NotCalibrated : public Error {
public:
    using Error::Error;
};

} // namespace dic

#define DIC_THROW(ErrorType, message)                                                              \
    do {                                                                                           \
        std::ostringstream dic_msg_stream_;                                                        \
        dic_msg_stream_ << message;                                                                \
        throw ErrorType(dic_msg_stream_.str());                                                    \
    } while (false)

#define DIC_REQUIRE(condition, message)                                                            \
    do {                                                                                           \
        if (!(condition))                                                                          \
            DIC_THROW(::dic::ValidationError, message);                                            \
    } while (false)
