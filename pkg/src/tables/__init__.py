"""Result and fit table schemas plus the append-only CSV store."""
