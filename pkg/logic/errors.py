class NotionError(Exception):
    # Base for every error raised by the library
    exit_code = 1


class ParameterError(NotionError, ValueError):
    # Invalid notion parameters, flags or (id, params) combinations
    exit_code = 2


class CapabilityError(NotionError):
    # Request exceeds a configured sieve / counting / enumeration limit
    exit_code = 3


class ExhaustionError(NotionError):
    # Retry budget ran out before an admissible draw was found
    exit_code = 3


class EmptyRegionError(NotionError):
    # Operation needs a nonempty region
    exit_code = 3
