# Core configuration, errors and report storage
