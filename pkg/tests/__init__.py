# Tests for tbs-noma
