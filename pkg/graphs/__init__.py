# Graph and neighborhood module
