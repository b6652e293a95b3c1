# Round compression module
