# Models package for rate-region records
