# LOCAL model module
