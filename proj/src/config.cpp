// placeholder, filled in by module implementation
